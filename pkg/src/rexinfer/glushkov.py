"""Position automata for regular expressions.

Each symbol occurrence in an expression is a position; the automaton has
one labeled state per position, with edges given by the classic
first/last/follow sets.  An expression is deterministic exactly when this
automaton is, and the automaton is the bridge to counting, equivalence
and coverage.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .automaton import SINK, SRC, Koa, Sample, det_run, witnessed_edges
from .regex import (
    EMPTY,
    EPSILON,
    Concat,
    Disj,
    Empty,
    Epsilon,
    Opt,
    Plus,
    Regex,
    Sym,
    concat,
    disj,
)

Word = tuple[str, ...]

DETERMINIZATION_LIMIT = 1 << 16


class DeterminizationLimitExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# position sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Sets:
    first: frozenset[int]
    last: frozenset[int]
    follow: dict[int, set[int]]
    nullable: bool


def _drop_empty(e: Regex) -> Regex:
    """Remove EMPTY subexpressions; the result is EMPTY or EMPTY-free."""
    if isinstance(e, Opt):
        inner = _drop_empty(e.inner)
        return EPSILON if isinstance(inner, Empty) else Opt(inner)
    if isinstance(e, Plus):
        inner = _drop_empty(e.inner)
        return EMPTY if isinstance(inner, Empty) else Plus(inner)
    if isinstance(e, Concat):
        parts = [_drop_empty(p) for p in e.parts]
        if any(isinstance(p, Empty) for p in parts):
            return EMPTY
        return concat(parts)
    if isinstance(e, Disj):
        parts = [p for p in (_drop_empty(q) for q in e.parts) if not isinstance(p, Empty)]
        return disj(parts)
    return e


def _position_sets(e: Regex, counter: list[int]) -> _Sets:
    if isinstance(e, Empty) or isinstance(e, Epsilon):
        return _Sets(frozenset(), frozenset(), {}, isinstance(e, Epsilon))
    if isinstance(e, Sym):
        i = counter[0]
        counter[0] += 1
        s = frozenset([i])
        return _Sets(s, s, {i: set()}, False)
    if isinstance(e, Opt):
        inner = _position_sets(e.inner, counter)
        return _Sets(inner.first, inner.last, inner.follow, True)
    if isinstance(e, Plus):
        inner = _position_sets(e.inner, counter)
        follow = inner.follow
        for x in inner.last:
            follow[x] |= inner.first
        return _Sets(inner.first, inner.last, follow, inner.nullable)
    if isinstance(e, Concat):
        acc = _position_sets(e.parts[0], counter)
        for part in e.parts[1:]:
            nxt = _position_sets(part, counter)
            follow = acc.follow
            follow.update(nxt.follow)
            for x in acc.last:
                follow[x] |= nxt.first
            first = acc.first | nxt.first if acc.nullable else acc.first
            last = nxt.last | acc.last if nxt.nullable else nxt.last
            acc = _Sets(first, last, follow, acc.nullable and nxt.nullable)
        return acc
    if isinstance(e, Disj):
        parts = [_position_sets(p, counter) for p in e.parts]
        follow: dict[int, set[int]] = {}
        for p in parts:
            follow.update(p.follow)
        return _Sets(
            frozenset().union(*(p.first for p in parts)),
            frozenset().union(*(p.last for p in parts)),
            follow,
            any(p.nullable for p in parts),
        )
    raise TypeError(f"not a Regex: {e!r}")


@dataclass(frozen=True)
class PositionSets:
    """first/last/follow keyed by position name, plus nullability."""

    first: frozenset[str]
    last: frozenset[str]
    follow: dict[str, frozenset[str]]
    nullable: bool


def position_sets(e: Regex) -> PositionSets:
    """Position sets of an expression whose atoms are pairwise distinct
    (e.g. a marked expression).  Keys are the atom names themselves.
    """
    from .regex import atoms

    names = [a.name for a in atoms(e)]
    if len(set(names)) != len(names):
        raise ValueError("atoms must be pairwise distinct; mark the expression first")
    sets = _position_sets(e, [0])
    return PositionSets(
        first=frozenset(names[i] for i in sets.first),
        last=frozenset(names[i] for i in sets.last),
        follow={
            names[i]: frozenset(names[j] for j in f) for i, f in sets.follow.items()
        },
        nullable=sets.nullable,
    )


def glushkov_automaton(e: Regex) -> Koa:
    """Position automaton: one labeled state per symbol occurrence.

    Rejects expressions denoting the empty language.  Atoms keep their
    spelling as state labels, so a marked expression yields an automaton
    over the marked alphabet.
    """
    from .regex import atoms

    e = _drop_empty(e)
    if isinstance(e, Empty):
        raise ValueError("the empty language has no position automaton")
    names = [a.name for a in atoms(e)]
    sets = _position_sets(e, [0])
    edges: set[tuple[int, int]] = set()
    if sets.nullable:
        edges.add((SRC, SINK))
    for i in sets.first:
        edges.add((SRC, i + 2))
    for i in sets.last:
        edges.add((i + 2, SINK))
    for i, fol in sets.follow.items():
        for j in fol:
            edges.add((i + 2, j + 2))
    return Koa(tuple(names), frozenset(edges))


def is_deterministic(e: Regex) -> bool:
    """True when no state of the position automaton has two same-labeled
    successors; such expressions can be matched with one-symbol lookahead.
    """
    e = _drop_empty(e)
    if isinstance(e, (Empty, Epsilon)):
        return True
    return glushkov_automaton(e).is_deterministic


def accepts(e: Regex, word: Word) -> bool:
    """Membership through the position automaton."""
    e = _drop_empty(e)
    if isinstance(e, Empty):
        return False
    from .automaton import nfa_accepts

    return nfa_accepts(glushkov_automaton(e), word)


# ---------------------------------------------------------------------------
# determinization, counting, equivalence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dfa:
    """Dense deterministic automaton: complete over its alphabet."""

    alphabet: tuple[str, ...]
    transitions: tuple[tuple[int, ...], ...]  # [state][symbol index] -> state
    accepting: tuple[bool, ...]
    start: int = 0


def determinize(g: Koa, alphabet: tuple[str, ...] | None = None) -> Dfa:
    """Subset construction over a state-labeled automaton, completed with a
    dead state.  Raises DeterminizationLimitExceeded beyond 2**16 subsets.
    """
    alpha = alphabet if alphabet is not None else g.alphabet
    index = {a: i for i, a in enumerate(alpha)}
    by_sym: list[dict[int, list[int]]] = [dict() for _ in alpha]
    for f, t in g.edges:
        if t == SINK:
            continue
        by_sym[index[g.label(t)]].setdefault(f, []).append(t)

    start = frozenset([SRC])
    subsets: dict[frozenset[int], int] = {start: 0}
    order = [start]
    trans: list[list[int]] = []
    accepting: list[bool] = []
    pos = 0
    while pos < len(order):
        cur = order[pos]
        pos += 1
        accepting.append(any(SINK in g.successors(s) for s in cur))
        row = []
        for si in range(len(alpha)):
            nxt = frozenset(t for s in cur for t in by_sym[si].get(s, ()))
            if nxt not in subsets:
                if len(subsets) >= DETERMINIZATION_LIMIT:
                    raise DeterminizationLimitExceeded(
                        f"more than {DETERMINIZATION_LIMIT} subsets"
                    )
                subsets[nxt] = len(order)
                order.append(nxt)
            row.append(subsets[nxt])
        trans.append(row)
    # the empty subset, if reachable, already acts as the dead state
    return Dfa(tuple(alpha), tuple(tuple(r) for r in trans), tuple(accepting))


def count_words(e: Regex, n: int) -> list[int]:
    """Exact number of accepted words of each length 0..n.

    Counts are arbitrary-precision; the expression is determinized first,
    so the same word is never counted twice.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    e = _drop_empty(e)
    if isinstance(e, Empty):
        return [0] * (n + 1)
    dfa = determinize(glushkov_automaton(e))
    vec = [0] * len(dfa.transitions)
    vec[dfa.start] = 1
    counts = []
    for _ in range(n + 1):
        counts.append(sum(v for v, acc in zip(vec, dfa.accepting) if acc and v))
        nxt = [0] * len(vec)
        for s, v in enumerate(vec):
            if not v:
                continue
            for t in dfa.transitions[s]:
                nxt[t] += v
        vec = nxt
    return counts


def _product_disagreement(e1: Regex, e2: Regex, mode: str) -> bool:
    """BFS over the product of the two determinized automata.

    mode 'equiv': True when some reachable pair disagrees on acceptance.
    mode 'subset': True when some reachable pair accepts in e1 but not e2.
    """
    e1 = _drop_empty(e1)
    e2 = _drop_empty(e2)
    from .regex import atoms

    alpha = tuple(sorted({a.name for a in atoms(e1)} | {a.name for a in atoms(e2)}))

    def dfa_of(e: Regex) -> Dfa | None:
        if isinstance(e, Empty):
            return None
        return determinize(glushkov_automaton(e), alpha)

    d1, d2 = dfa_of(e1), dfa_of(e2)

    def acc(d: Dfa | None, s: int) -> bool:
        return d is not None and d.accepting[s]

    def step(d: Dfa | None, s: int, si: int) -> int:
        return d.transitions[s][si] if d is not None else 0

    start = (0, 0)
    seen = {start}
    queue = [start]
    while queue:
        s1, s2 = queue.pop()
        a1, a2 = acc(d1, s1), acc(d2, s2)
        if mode == "equiv" and a1 != a2:
            return True
        if mode == "subset" and a1 and not a2:
            return True
        for si in range(len(alpha)):
            nxt = (step(d1, s1, si), step(d2, s2, si))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def equivalent(e1: Regex, e2: Regex) -> bool:
    """Exact language equality."""
    return not _product_disagreement(e1, e2, "equiv")


def language_subset(e1: Regex, e2: Regex) -> bool:
    """Exact test for L(e1) being contained in L(e2)."""
    return not _product_disagreement(e1, e2, "subset")


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------

def coverage(e: Regex, sample: Sample) -> Fraction:
    """Fraction of position-automaton edges that some sample word's
    accepting run traverses.  The expression must be deterministic.
    """
    g = glushkov_automaton(e)
    if not g.is_deterministic:
        raise ValueError("coverage needs a deterministic expression")
    hit = witnessed_edges(g, sample)
    return Fraction(len(hit), len(g.edges))
