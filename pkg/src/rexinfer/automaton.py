"""State-labeled automata and word bags.

An automaton here is a directed graph with a source, a sink, and labeled
inner states; reading a word means walking src -> ... -> sink through
states whose labels spell the word.  Labels live on states, not edges,
so an automaton with at most k states per symbol can distinguish at most
k contexts for that symbol.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

SRC = 0
SINK = 1

Word = tuple[str, ...]


@dataclass(frozen=True)
class Koa:
    """Immutable state-labeled automaton.

    State ids: 0 is the source, 1 is the sink, label ``labels[i]`` belongs
    to state ``i + 2``.  Every labeled state must lie on some src -> sink
    walk; the source has no incoming and the sink no outgoing edges.
    """

    labels: tuple[str, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset(self.edges))
        n = self.n_states
        for f, t in self.edges:
            if not (0 <= f < n and 0 <= t < n):
                raise ValueError(f"edge ({f},{t}) out of range for {n} states")
            if t == SRC:
                raise ValueError("source must have no incoming edges")
            if f == SINK:
                raise ValueError("sink must have no outgoing edges")
        live = self._walk_states()
        dead = set(range(2, n)) - live
        if dead:
            raise ValueError(f"states not on any src->sink walk: {sorted(dead)}")

    @property
    def n_states(self) -> int:
        return len(self.labels) + 2

    def label(self, s: int) -> str:
        return self.labels[s - 2]

    def _walk_states(self) -> set[int]:
        fwd = {SRC}
        stack = [SRC]
        while stack:
            u = stack.pop()
            for v in self.successors(u):
                if v not in fwd:
                    fwd.add(v)
                    stack.append(v)
        bwd = {SINK}
        stack = [SINK]
        while stack:
            u = stack.pop()
            for v in self.predecessors(u):
                if v not in bwd:
                    bwd.add(v)
                    stack.append(v)
        return fwd & bwd

    @cached_property
    def _succ(self) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in range(self.n_states)]
        for f, t in self.edges:
            out[f].add(t)
        return tuple(frozenset(s) for s in out)

    @cached_property
    def _pred(self) -> tuple[frozenset[int], ...]:
        out: list[set[int]] = [set() for _ in range(self.n_states)]
        for f, t in self.edges:
            out[t].add(f)
        return tuple(frozenset(s) for s in out)

    def successors(self, s: int) -> frozenset[int]:
        return self._succ[s]

    def predecessors(self, s: int) -> frozenset[int]:
        return self._pred[s]

    def labeled_successors(self, s: int, sym: str) -> tuple[int, ...]:
        return tuple(
            t for t in sorted(self._succ[s]) if t != SINK and self.label(t) == sym
        )

    @cached_property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @cached_property
    def is_deterministic(self) -> bool:
        """At most one successor per symbol from every state."""
        for s in range(self.n_states):
            if s == SINK:
                continue
            seen: set[str] = set()
            for t in self._succ[s]:
                if t == SINK:
                    continue
                lab = self.label(t)
                if lab in seen:
                    return False
                seen.add(lab)
        return True

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "src": SRC,
            "sink": SINK,
            "states": [
                {"id": i + 2, "label": lab} for i, lab in enumerate(self.labels)
            ],
            "edges": sorted([f, t] for f, t in self.edges),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Koa":
        src = data["src"]
        sink = data["sink"]
        remap = {src: SRC, sink: SINK}
        labels = []
        for st in sorted(data["states"], key=lambda s: s["id"]):
            if st["id"] in remap:
                raise ValueError("state id collides with src/sink")
            remap[st["id"]] = len(labels) + 2
            labels.append(st["label"])
        edges = frozenset((remap[f], remap[t]) for f, t in data["edges"])
        return cls(tuple(labels), edges)

    @classmethod
    def from_json(cls, text: str) -> "Koa":
        return cls.from_dict(json.loads(text))


def complete_koa(alphabet: Iterable[str], k: int) -> Koa:
    """The complete automaton with k states per symbol.

    src has an edge to the sink and to the first state of every symbol;
    every labeled state has an edge to every labeled state (itself
    included) and to the sink.  Accepts every word over the alphabet.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    syms = tuple(sorted(set(alphabet)))
    labels = tuple(s for s in syms for _ in range(k))
    n = len(labels)
    edges = {(SRC, SINK)}
    for i, lab in enumerate(labels):
        if i % k == 0:  # first copy of its symbol
            edges.add((SRC, i + 2))
        edges.add((i + 2, SINK))
        for j in range(n):
            edges.add((i + 2, j + 2))
    return Koa(labels, frozenset(edges))


def nfa_accepts(g: Koa, word: Word) -> bool:
    """Subset-simulation membership; works for non-deterministic automata."""
    cur = {SRC}
    for sym in word:
        cur = {
            t
            for s in cur
            for t in g.successors(s)
            if t != SINK and g.label(t) == sym
        }
        if not cur:
            return False
    return any(SINK in g.successors(s) for s in cur)


def det_run(g: Koa, word: Word) -> tuple[int, ...] | None:
    """The unique accepting run of a word through a deterministic automaton,
    or None if the word is rejected.  Raises on non-deterministic input.
    """
    if not g.is_deterministic:
        raise ValueError("det_run needs a deterministic automaton")
    run = [SRC]
    cur = SRC
    for sym in word:
        nxt = g.labeled_successors(cur, sym)
        if not nxt:
            return None
        cur = nxt[0]
        run.append(cur)
    if SINK not in g.successors(cur):
        return None
    run.append(SINK)
    return tuple(run)


def witnessed_edges(g: Koa, sample: "Sample") -> frozenset[tuple[int, int]]:
    """Edges traversed by the unique accepting run of some sample word."""
    hit: set[tuple[int, int]] = set()
    for word in sample.distinct_words():
        run = det_run(g, word)
        if run is None:
            continue
        hit.update(zip(run, run[1:]))
    return frozenset(hit)


def prune(g: Koa, sample: "Sample") -> Koa:
    """Drop edges no sample word uses, then any state left off all
    src -> sink walks.  The automaton must be deterministic and accept
    every sample word.
    """
    for word in sample.distinct_words():
        if det_run(g, word) is None:
            raise ValueError(f"sample word rejected before pruning: {' '.join(word) or 'EPS'}")
    keep = witnessed_edges(g, sample)
    # states that still sit on a witnessed walk
    live = {SRC, SINK} | {s for e in keep for s in e}
    old_ids = sorted(s for s in live if s >= 2)
    remap = {SRC: SRC, SINK: SINK}
    for new, old in enumerate(old_ids):
        remap[old] = new + 2
    labels = tuple(g.label(s) for s in old_ids)
    edges = frozenset((remap[f], remap[t]) for f, t in keep)
    return Koa(labels, edges)


class Sample:
    """Immutable bag of words; multiplicities matter for training."""

    __slots__ = ("_counts", "_total")

    def __init__(self, words: Iterable[Word] | Mapping[Word, int] = ()):
        counts: dict[Word, int] = {}
        if isinstance(words, Mapping):
            items = words.items()
        else:
            items = ((w, 1) for w in words)
        for w, m in items:
            w = tuple(w)
            if m < 0:
                raise ValueError("negative multiplicity")
            if m:
                counts[w] = counts.get(w, 0) + m
        self._counts = counts
        self._total = sum(counts.values())

    @property
    def total(self) -> int:
        return self._total

    @property
    def n_distinct(self) -> int:
        return len(self._counts)

    def multiplicity(self, word: Word) -> int:
        return self._counts.get(tuple(word), 0)

    def distinct_words(self) -> list[Word]:
        return sorted(self._counts)

    def items(self) -> Iterator[tuple[Word, int]]:
        return iter(sorted(self._counts.items()))

    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted({s for w in self._counts for s in w}))

    def __contains__(self, word: Word) -> bool:
        return tuple(word) in self._counts

    def __eq__(self, other) -> bool:
        return isinstance(other, Sample) and self._counts == other._counts

    def __repr__(self) -> str:
        return f"Sample({self._total} words, {self.n_distinct} distinct)"

    def merged_with(self, other: "Sample") -> "Sample":
        counts = dict(self._counts)
        for w, m in other._counts.items():
            counts[w] = counts.get(w, 0) + m
        return Sample(counts)

    # -- text format: one word per line, symbols separated by spaces, an
    #    empty line is the empty word, full-line # comments, duplicates
    #    are multiplicities ------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "Sample":
        words = []
        for line in text.splitlines():
            if line.lstrip().startswith("#"):
                continue
            words.append(tuple(line.split()))
        return cls(words)

    def to_text(self) -> str:
        lines = []
        for w, m in self.items():
            lines.extend([" ".join(w)] * m)
        return "\n".join(lines) + ("\n" if lines else "")
