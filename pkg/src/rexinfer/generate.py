"""Synthetic targets and samples.

Target expressions are grown top-down over a fixed multiset of symbol
occurrences and rejection-sampled until deterministic.  Sample words are
drawn by a stochastic walk of the expression tree; covering samples add
one shortest witness word per position-automaton edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .automaton import SINK, SRC, Sample, nfa_accepts
from .glushkov import glushkov_automaton, is_deterministic
from .regex import (
    Concat,
    Disj,
    Epsilon,
    Opt,
    Plus,
    Regex,
    Sym,
    concat,
    disj,
    simplify,
    stats,
)

_OPS = ("concat", "disj", "optional", "star", "plus")


class GenerationBudgetExceeded(RuntimeError):
    """No deterministic expression found within the attempt budget."""


@dataclass(frozen=True)
class GenConfig:
    alphabet: tuple[str, ...]
    per_symbol_occurrences: tuple[int, ...]
    op_probs: tuple[float, ...] = (7 / 20, 7 / 20, 1 / 10, 1 / 10, 1 / 10)
    seed: int | None = None
    max_attempts: int = 10_000

    def __post_init__(self):
        if len(self.alphabet) != len(self.per_symbol_occurrences):
            raise ValueError("one occurrence count per symbol")
        if len(self.alphabet) != len(set(self.alphabet)):
            raise ValueError("alphabet symbols must be distinct")
        if any(c < 1 for c in self.per_symbol_occurrences):
            raise ValueError("occurrence counts must be >= 1")
        if len(self.op_probs) != len(_OPS):
            raise ValueError(f"op_probs must weight {_OPS}")
        if abs(sum(self.op_probs) - 1.0) > 1e-9 or min(self.op_probs) < 0:
            raise ValueError("op_probs must be a probability vector")

    @property
    def k(self) -> int:
        return max(self.per_symbol_occurrences)


@dataclass(frozen=True)
class SampleGenConfig:
    size: int
    loop_continue: float = 2 / 3
    optional_take: float = 1 / 2

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("size must be >= 0")
        for p in (self.loop_continue, self.optional_take):
            if not 0 < p < 1:
                raise ValueError("probabilities must lie in (0, 1)")


def _grow(leaves: list[str], probs: np.ndarray, rng: np.random.Generator) -> Regex:
    op = _OPS[rng.choice(len(_OPS), p=probs)]
    if op in ("concat", "disj"):
        if len(leaves) == 1:
            return Sym(leaves[0])
        # uniform over bipartitions with both sides nonempty
        while True:
            side = rng.integers(0, 2, size=len(leaves))
            if 0 < side.sum() < len(leaves):
                break
        left = [s for s, b in zip(leaves, side) if not b]
        right = [s for s, b in zip(leaves, side) if b]
        parts = [_grow(left, probs, rng), _grow(right, probs, rng)]
        return concat(parts) if op == "concat" else disj(parts)
    inner = _grow(leaves, probs, rng)
    if op == "optional":
        return Opt(inner)
    if op == "plus":
        return Plus(inner)
    return Opt(Plus(inner))  # star


def gen_expression(cfg: GenConfig, rng: np.random.Generator | None = None) -> Regex:
    """A random simplified deterministic expression using each symbol
    exactly as often as configured (occurrences may shrink under
    simplification, never grow).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    leaves = [
        s for s, c in zip(cfg.alphabet, cfg.per_symbol_occurrences) for _ in range(c)
    ]
    probs = np.asarray(cfg.op_probs, dtype=float)
    probs = probs / probs.sum()
    for _ in range(cfg.max_attempts):
        e = simplify(_grow(leaves, probs, rng))
        if not is_deterministic(e):
            continue
        st = stats(e)
        assert st.k <= cfg.k and st.alphabet <= set(cfg.alphabet)
        return e
    raise GenerationBudgetExceeded(
        f"no deterministic expression in {cfg.max_attempts} attempts "
        f"(|alphabet|={len(cfg.alphabet)}, k={cfg.k})"
    )


def _walk(e: Regex, cfg: SampleGenConfig, rng: np.random.Generator, out: list[str]):
    if isinstance(e, Sym):
        out.append(e.name)
    elif isinstance(e, Epsilon):
        pass
    elif isinstance(e, Concat):
        for p in e.parts:
            _walk(p, cfg, rng, out)
    elif isinstance(e, Disj):
        _walk(e.parts[rng.integers(len(e.parts))], cfg, rng, out)
    elif isinstance(e, Opt):
        if rng.random() < cfg.optional_take:
            _walk(e.inner, cfg, rng, out)
    elif isinstance(e, Plus):
        while True:
            _walk(e.inner, cfg, rng, out)
            if rng.random() >= cfg.loop_continue:
                break
    else:
        raise ValueError(f"cannot sample from {e!r}")


def gen_sample(
    r: Regex, cfg: SampleGenConfig, rng: np.random.Generator | None = None
) -> Sample:
    """Words drawn by a stochastic walk: uniform disjunct, optional taken
    with probability 1/2, loop continued with probability 2/3 (defaults).
    """
    if rng is None:
        rng = np.random.default_rng()
    g = glushkov_automaton(r)  # rejects the empty language
    words = []
    for _ in range(cfg.size):
        out: list[str] = []
        _walk(r, cfg, rng, out)
        w = tuple(out)
        assert nfa_accepts(g, w), f"walk produced a word outside the language: {w}"
        words.append(w)
    return Sample(words)


def covering_sample(
    r: Regex,
    rng: np.random.Generator | None = None,
    size: int | None = None,
    sample_cfg: SampleGenConfig | None = None,
) -> Sample:
    """One shortest witness word per position-automaton edge, padded with
    stochastic draws up to `size` words when requested.
    """
    if rng is None:
        rng = np.random.default_rng()
    g = glushkov_automaton(r)
    if not g.is_deterministic:
        raise ValueError("covering samples need a deterministic expression")

    # BFS trees: shortest spelling into every state, and out to the sink
    into: dict[int, tuple[str, ...]] = {SRC: ()}
    queue = deque([SRC])
    while queue:
        s = queue.popleft()
        for t in sorted(g.successors(s)):
            if t != SINK and t not in into:
                into[t] = into[s] + (g.label(t),)
                queue.append(t)
    out_of: dict[int, tuple[str, ...]] = {SINK: ()}
    queue = deque([SINK])
    while queue:
        t = queue.popleft()
        for s in sorted(g.predecessors(t)):
            if s not in out_of:
                out_of[s] = ((g.label(t),) if t != SINK else ()) + out_of[t]
                queue.append(s)

    words = set()
    for f, t in sorted(g.edges):
        head = into[f]
        tail = (g.label(t),) + out_of[t] if t != SINK else ()
        words.add(head + tail)
    sample = Sample(words)
    if size is not None and sample.total < size:
        base = sample_cfg or SampleGenConfig(size=1)
        pad_cfg = SampleGenConfig(
            size=size - sample.total,
            loop_continue=base.loop_continue,
            optional_take=base.optional_take,
        )
        sample = sample.merged_with(gen_sample(r, pad_cfg, rng))
    return sample


def hard_family(n: int, which: str) -> Regex:
    """Targets known to need large samples: one family hides a pair inside
    a big alternation loop, the other flanks a unique symbol with loops.
    """
    if which == "r1":
        if n < 3:
            raise ValueError("r1 needs n >= 3")
        pair = concat([Sym("a1"), Sym("a2")])
        return Plus(disj([pair] + [Sym(f"a{i}") for i in range(3, n + 1)]))
    if which == "r2":
        if n < 2:
            raise ValueError("r2 needs n >= 2")
        loop = Plus(disj([Sym(f"a{i}") for i in range(2, n + 1)]))
        return concat([loop, Sym("a1"), loop])
    raise ValueError("which must be 'r1' or 'r2'")
