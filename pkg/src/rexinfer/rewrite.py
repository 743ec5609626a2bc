"""Automaton-to-expression translation.

A k-occurrence automaton is marked so every state carries a distinct
symbol copy, the marked single-occurrence automaton is contracted to a
single state by graph rewrites, and the marks are stripped from the
resulting expression.

The four contraction rules (disjunction, optional, concatenation,
self-loop) are language-preserving, but greedy application can paint
itself into a corner: an early rule may consume edges a later rule
needed, leaving the graph stuck even though some other order contracts
it fully.  Every rule strictly shrinks states+edges, so the space of
rule orders is a bounded dag; a memoized depth-first search over it
finds an exact contraction whenever one exists (within a node budget).
Only when the search comes up empty does the greedy lane run, with
repair steps that add the cheapest set of edges re-enabling a rule.
Added edges only ever grow the language, so the result is a
super-approximation in that case.
"""

from __future__ import annotations

from .automaton import SINK, SRC, Koa
from .regex import (
    EMPTY,
    EPSILON,
    Opt,
    Plus,
    Regex,
    Sym,
    concat,
    disj,
    marked,
    render,
    strip,
    strip_symbol,
)

# Work cap for the exact-contraction search, spent as SEARCH_BUDGET
# divided by the edge count (never below SEARCH_FLOOR nodes).  An
# existing exact order turns up within about 1.5x the state count of
# expanded nodes, because the first branch descended is the greedy
# order; only proving that no order works can run long, and each node
# costs more on bigger graphs, so those get fewer nodes before the
# repair lane takes over.
SEARCH_BUDGET = 65_536
SEARCH_FLOOR = 512


def marking(g: Koa) -> Koa:
    """Relabel the i-th state carrying symbol a (in state order) as a#i.

    The result is single-occurrence: dropping the marks recovers g's
    language word for word.
    """
    seen: dict[str, int] = {}
    labels = []
    for lab in g.labels:
        seen[lab] = seen.get(lab, 0) + 1
        labels.append(marked(lab, seen[lab]))
    return Koa(tuple(labels), g.edges)


class _Rewriter:
    """Mutable working graph whose labeled states carry subexpressions."""

    def __init__(self, g: Koa):
        self.labels: dict[int, Regex] = {
            s: Sym(g.label(s)) for s in range(2, g.n_states)
        }
        self.succ: dict[int, set[int]] = {s: set() for s in range(g.n_states)}
        self.pred: dict[int, set[int]] = {s: set() for s in range(g.n_states)}
        for f, t in g.edges:
            self.succ[f].add(t)
            self.pred[t].add(f)
        self.next_id = g.n_states
        self.repairs = 0
        self.opt_repaired: set[int] = set()
        self.base_alphabet = tuple(
            sorted({strip_symbol(lab) for lab in g.labels})
        )
        # generous; contraction provably terminates, this guards the repairs
        self.budget = 16 * (g.n_states + len(g.edges) + 4) ** 2

    # -- plumbing ---------------------------------------------------------

    def _add_edge(self, f: int, t: int) -> None:
        self.succ[f].add(t)
        self.pred[t].add(f)

    def _drop_state(self, v: int) -> None:
        for p in list(self.pred[v]):
            self.succ[p].discard(v)
        for s in list(self.succ[v]):
            self.pred[s].discard(v)
        del self.labels[v], self.succ[v], self.pred[v]

    def _merge(
        self,
        v: int,
        w: int,
        label: Regex,
        self_loop: bool,
        preds: set[int],
        succs: set[int],
    ) -> None:
        self._drop_state(v)
        self._drop_state(w)
        n = self.next_id
        self.next_id += 1
        self.labels[n] = label
        self.succ[n] = set()
        self.pred[n] = set()
        for p in preds:
            self._add_edge(p, n)
        for s in succs:
            self._add_edge(n, s)
        if self_loop:
            self._add_edge(n, n)

    def _snapshot(self) -> tuple:
        return (
            dict(self.labels),
            {v: set(s) for v, s in self.succ.items()},
            {v: set(p) for v, p in self.pred.items()},
            self.next_id,
        )

    def _restore(self, snap: tuple) -> None:
        labels, succ, pred, next_id = snap
        self.labels = dict(labels)
        self.succ = {v: set(s) for v, s in succ.items()}
        self.pred = {v: set(p) for v, p in pred.items()}
        self.next_id = next_id

    def _key(self) -> frozenset:
        # labels are pairwise distinct and merges keep them that way, so
        # rendering names states independently of allocation order
        names = {SRC: "\x00src", SINK: "\x00sink"}
        for v, lab in self.labels.items():
            names[v] = render(lab)
        return frozenset(
            (names[f], names[t]) for f, ts in self.succ.items() for t in ts
        )

    # -- contraction rules, each language-preserving ----------------------

    def _iter_disjunctions(self):
        # two states with identical predecessor and successor sets (the
        # states themselves included, so matching loop structure is
        # forced) accept the same contexts and can merge
        states = sorted(self.labels)
        for i, v in enumerate(states):
            pv, sv = self.pred[v], self.succ[v]
            for w in states[i + 1 :]:
                if self.pred[w] == pv and self.succ[w] == sv:
                    yield v, w

    def _iter_optionals(self):
        # Loop-free states all of whose bypass edges are present.  The
        # src->sink edge never counts as removable: several nullable
        # branches may share it, so consuming it for one would strand
        # the others.  It stays put until the very end, where it turns
        # into an outer ?.
        for v in sorted(self.labels):
            sv = self.succ[v]
            if v in sv:
                continue
            pv = self.pred[v]
            if pv == {SRC} and sv == {SINK}:
                continue
            if all(s in self.succ[p] for p in pv for s in sv):
                yield v

    def _iter_concats(self):
        # a state whose only successor is a state with no other
        # predecessor always runs as one block
        for v in sorted(self.labels):
            sv = self.succ[v]
            if len(sv) != 1:
                continue
            (w,) = sv
            if w != v and w in self.labels and self.pred[w] == {v}:
                yield v, w

    def _loop_score(self, v: int) -> int:
        # Converting a self-loop into a +-label is always exact, but the
        # choice of loop decides whether the rest keeps contracting.
        # Rank removals: one enabling a merge, then one enabling an
        # optional over internal edges only, then one enabling any
        # optional, then blind removal.
        self.succ[v].discard(v)
        self.pred[v].discard(v)
        if next(self._iter_concats(), None) or next(
            self._iter_disjunctions(), None
        ):
            score = 0
        else:
            score = 3
            for u in self._iter_optionals():
                if SRC not in self.pred[u] and SINK not in self.succ[u]:
                    score = 1
                    break
                score = 2
        self.succ[v].add(v)
        self.pred[v].add(v)
        return score

    def _moves(self) -> list[tuple]:
        moves: list[tuple] = [("disj", v, w) for v, w in self._iter_disjunctions()]
        moves += [("opt", v) for v in self._iter_optionals()]
        moves += [("cat", v, w) for v, w in self._iter_concats()]
        loops = [v for v in sorted(self.labels) if v in self.succ[v]]
        moves += [
            ("loop", v)
            for _, v in sorted((self._loop_score(v), v) for v in loops)
        ]
        return moves

    def _apply(self, move: tuple) -> None:
        kind = move[0]
        if kind == "disj":
            _, v, w = move
            pv, sv = self.pred[v], self.succ[v]
            self._merge(
                v,
                w,
                disj([self.labels[v], self.labels[w]]),
                bool({v, w} & sv),
                pv - {v, w},
                sv - {v, w},
            )
        elif kind == "opt":
            # absorbing the bypasses is exact: every walk that skipped v
            # now runs through v's ?-label
            _, v = move
            for p in list(self.pred[v]):
                for s in list(self.succ[v]):
                    if p == SRC and s == SINK:
                        continue
                    self.succ[p].discard(s)
                    self.pred[s].discard(p)
            self.labels[v] = Opt(self.labels[v])
        elif kind == "cat":
            # a back edge w->v turns into a self-loop of the merged block
            _, v, w = move
            self._merge(
                v,
                w,
                concat([self.labels[v], self.labels[w]]),
                v in self.succ[w],
                self.pred[v] - {w},
                self.succ[w] - {v},
            )
        else:
            _, v = move
            self.succ[v].discard(v)
            self.pred[v].discard(v)
            self.labels[v] = Plus(self.labels[v])

    def _finish(self) -> Regex:
        # no move applies, so at most src->v->sink and a src->sink edge
        # are left; the latter surfaces as an outer ?
        if not self.labels:
            return EPSILON if SINK in self.succ[SRC] else EMPTY
        (v,) = self.labels
        if SINK in self.succ[SRC]:
            return Opt(self.labels[v])
        return self.labels[v]

    def _search(self) -> Regex | None:
        # depth-first over rule applications; every move shrinks
        # states+edges, so paths are short and revisits only happen
        # across branches, which the key set collapses
        edge_count = sum(len(s) for s in self.succ.values())
        limit = max(SEARCH_FLOOR, SEARCH_BUDGET // max(1, edge_count))
        seen: set[frozenset] = set()
        stack = [self._snapshot()]
        nodes = 0
        while stack:
            self._restore(stack.pop())
            key = self._key()
            if key in seen:
                continue
            seen.add(key)
            nodes += 1
            if nodes > limit:
                return None
            moves = self._moves()
            if not moves:
                if len(self.labels) <= 1:
                    return self._finish()
                continue  # stuck graph: dead end on the exact lane
            snap = self._snapshot()
            for move in reversed(moves):
                self._restore(snap)
                self._apply(move)
                stack.append(self._snapshot())
        return None

    # -- repairs: add edges until some rule applies ------------------------

    def _repair(self) -> None:
        # candidates are (cost, kind, tie-break); kind 0 favours merging
        # two states into an alternation over forcing a state optional
        best: tuple | None = None
        states = sorted(self.labels)
        for i, v in enumerate(states):
            for w in states[i + 1 :]:
                # Contexts outside the pair must match exactly; edges
                # inside the pair must either all exist or not at all,
                # since the merge rule compares predecessor and
                # successor sets with the pair's own states included.
                # Adding lone self-loops instead would unbalance the
                # very sets the repair is trying to equalize.
                pu = (self.pred[v] | self.pred[w]) - {v, w}
                su = (self.succ[v] | self.succ[w]) - {v, w}
                needed = {(p, x) for p in pu for x in (v, w)}
                needed |= {(x, s) for x in (v, w) for s in su}
                if any(y in self.succ[x] for x in (v, w) for y in (v, w)):
                    needed |= {(x, y) for x in (v, w) for y in (v, w)}
                missing = {(f, t) for f, t in needed if t not in self.succ[f]}
                cand = (len(missing), 0, (v, w), missing, None)
                if best is None or cand[:3] < best[:3]:
                    best = cand
        for v in states:
            if v in self.opt_repaired or v in self.succ[v]:
                continue
            missing = {
                (p, s)
                for p in self.pred[v]
                for s in self.succ[v]
                if s not in self.succ[p]
            }
            if not missing:
                continue
            cand = (len(missing), 1, (v,), missing, v)
            if best is None or cand[:3] < best[:3]:
                best = cand
        if best is None:  # unreachable: >= 2 labeled states give a pair
            raise RuntimeError("no repair candidate")
        _, _, _, missing, opt_target = best
        for f, t in missing:
            self._add_edge(f, t)
        if opt_target is not None:
            self.opt_repaired.add(opt_target)
        self.repairs += 1

    def _fallback(self) -> Regex:
        # total last resort: any word over the base alphabet
        if not self.base_alphabet:
            return EPSILON
        return Opt(Plus(disj([Sym(a) for a in self.base_alphabet])))

    # -- driver ------------------------------------------------------------

    def run(self) -> Regex:
        origin = self._snapshot()
        exact = self._search()
        if exact is not None:
            return exact
        # no exact contraction found: contract greedily and patch the
        # graph whenever it gets stuck
        self._restore(origin)
        steps = 0
        while True:
            steps += 1
            if steps > self.budget:
                return self._fallback()
            moves = self._moves()
            if moves:
                self._apply(moves[0])
            elif len(self.labels) >= 2:
                self._repair()
            else:
                return self._finish()


def soa_to_sore(h: Koa) -> Regex:
    """Contract a single-occurrence automaton to an expression in which
    every label appears exactly once.  Exact whenever some
    single-occurrence expression has h's language; a superset otherwise.
    """
    if len(set(h.labels)) != len(h.labels):
        raise ValueError("labels must be pairwise distinct")
    return _Rewriter(h).run()


def koa_to_kore(g: Koa) -> Regex:
    """Translate an automaton with up to k same-labeled states into an
    expression using each symbol at most k times, accepting every word
    the automaton does.
    """
    return strip(soa_to_sore(marking(g)))
