"""Stochastic training and disambiguation on labeled automata.

A ``Pomm`` couples an automaton with a row-stochastic transition
distribution: a run starts at the source, hops to successors with the
given probabilities while emitting state labels, and stops on reaching
the sink.  ``init`` builds the starting process on the complete
automaton, ``baum_welch`` fits the distribution to a word bag by
expectation-maximization, and ``disambiguate`` prunes same-labeled
competing successors by largest trained mass until the automaton is
deterministic.  ``learn_koa`` chains the four stages (init, train,
disambiguate, prune) into one restart of the learner.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .automaton import SINK, SRC, Koa, Sample, Word, complete_koa, prune

__all__ = [
    "Pomm",
    "TrainConfig",
    "ZeroProbabilityWord",
    "DisambiguationFailed",
    "init",
    "word_probability",
    "log_likelihood",
    "baum_welch",
    "disambiguate",
    "default_bw_iters",
    "learn_koa",
]


class ZeroProbabilityWord(Exception):
    """A sample word has probability zero under the current process."""

    def __init__(self, word: Word):
        self.word = tuple(word)
        shown = " ".join(self.word) if self.word else "EPS"
        super().__init__(f"sample word has zero probability: {shown}")


class DisambiguationFailed(Exception):
    """This restart cannot be made deterministic without losing sample words."""


@dataclass
class TrainConfig:
    """Stopping rule for expectation-maximization.

    Training runs at most ``max_iters`` update steps and stops early
    when the relative log-likelihood improvement drops below
    ``convergence_epsilon``.
    """

    max_iters: int = 40
    convergence_epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.convergence_epsilon <= 0:
            raise ValueError("convergence_epsilon must be positive")


class Pomm:
    """An automaton plus transition probabilities on its edges.

    ``alpha`` maps every edge (s, t) to the probability of hopping to t
    when at s; each state's outgoing values sum to 1.  After a call to
    ``baum_welch`` the instance carries ``ll_history``, the per-iteration
    log-likelihoods measured before each update.
    """

    __slots__ = ("graph", "alpha", "ll_history")

    def __init__(self, graph: Koa, alpha: dict[tuple[int, int], float]):
        cleaned = {(int(f), int(t)): float(p) for (f, t), p in alpha.items()}
        if set(cleaned) != set(graph.edges):
            raise ValueError("alpha must assign a value to exactly the edges")
        for (f, t), p in cleaned.items():
            if not math.isfinite(p) or p < 0.0:
                raise ValueError(f"alpha({f},{t}) = {p} is not a probability")
        self.graph = graph
        self.alpha = cleaned
        self.ll_history: list[float] = []
        self.assert_stochastic()

    def assert_stochastic(self, tol: float = 1e-9) -> None:
        sums: dict[int, float] = {}
        for (f, _), p in self.alpha.items():
            sums[f] = sums.get(f, 0.0) + p
        for s, z in sums.items():
            if abs(z - 1.0) > tol:
                raise ValueError(f"outgoing mass of state {s} sums to {z!r}")

    def copy(self) -> "Pomm":
        out = Pomm(self.graph, dict(self.alpha))
        out.ll_history = list(self.ll_history)
        return out

    def __repr__(self) -> str:
        return f"Pomm({self.graph.n_states} states, {len(self.alpha)} edges)"


# -- packing to the kernel array convention --------------------------------


def _symbol_codes(graph: Koa) -> dict[str, int]:
    return {sym: i for i, sym in enumerate(graph.alphabet)}


def _pack_model(pomm: Pomm) -> tuple[np.ndarray, np.ndarray]:
    g = pomm.graph
    code = _symbol_codes(g)
    labels = np.full(g.n_states, -1, dtype=np.int64)
    for i, lab in enumerate(g.labels):
        labels[i + 2] = code[lab]
    trans = np.zeros((g.n_states, g.n_states))
    for (f, t), p in pomm.alpha.items():
        trans[f, t] = p
    return labels, trans


def _pack_words(sample: Sample, code: dict[str, int]):
    words = []
    mults = []
    for w, m in sample.items():
        words.append(w)
        mults.append(float(m))
    lens = np.array([len(w) for w in words], dtype=np.int64)
    starts = np.zeros(len(words), dtype=np.int64)
    if len(words) > 1:
        starts[1:] = np.cumsum(lens[:-1])
    flat = np.array(
        [code.get(sym, -2) for w in words for sym in w], dtype=np.int64
    )
    return flat, starts, lens, np.array(mults), words


def _unpack_alpha(graph: Koa, trans: np.ndarray) -> dict[tuple[int, int], float]:
    return {(f, t): float(trans[f, t]) for f, t in graph.edges}


def _reestimate(counts: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Maximization step: normalize rows of expected counts.

    A row with no expected usage (state unreachable under the sample)
    keeps its previous values, so zeroed edges stay zeroed and the row
    stays stochastic.
    """
    new = trans.copy()
    totals = counts.sum(axis=1)
    used = totals > 0.0
    new[used] = counts[used] / totals[used, None]
    return new


# -- operations --------------------------------------------------------------


def init(k: int, sample: Sample, rng=None) -> Pomm:
    """The starting process on the complete automaton of the sample.

    Source transitions reflect the sample directly: the mass to the sink
    is the fraction of empty words and the mass toward each symbol is
    the fraction of words starting with it (split evenly if several
    source successors carry the same label).  All other rows are drawn
    uniformly from the probability simplex over their out-edges.
    """
    if sample.total == 0:
        raise ValueError("cannot initialize from an empty sample")
    gen = np.random.default_rng(rng)
    g = complete_koa(sample.alphabet(), k)

    first_counts: dict[str, int] = {}
    for w, m in sample.items():
        if w:
            first_counts[w[0]] = first_counts.get(w[0], 0) + m

    alpha: dict[tuple[int, int], float] = {}
    alpha[(SRC, SINK)] = sample.multiplicity(()) / sample.total
    for sym in g.alphabet:
        share = first_counts.get(sym, 0) / sample.total
        targets = g.labeled_successors(SRC, sym)
        for t in targets:
            alpha[(SRC, t)] = share / len(targets)
    for s in range(2, g.n_states):
        out = sorted(g.successors(s))
        row = gen.dirichlet(np.ones(len(out)))
        for t, p in zip(out, row):
            alpha[(s, t)] = float(p)
    return Pomm(g, alpha)


def word_probability(pomm: Pomm, word: Word) -> float:
    """Total probability of all runs that emit the word."""
    labels, trans = _pack_model(pomm)
    code = _symbol_codes(pomm.graph)
    flat = np.array([code.get(sym, -2) for sym in word], dtype=np.int64)
    starts = np.zeros(1, dtype=np.int64)
    lens = np.array([len(word)], dtype=np.int64)
    mults = np.ones(1)
    ll, _ = kernels.batch_log_likelihood(flat, starts, lens, mults, labels, trans)
    return math.exp(ll)


def log_likelihood(pomm: Pomm, sample: Sample) -> float:
    """Sum of word log-probabilities weighted by bag multiplicity.

    A word outside the process's support makes the result -inf.
    """
    labels, trans = _pack_model(pomm)
    flat, starts, lens, mults, _ = _pack_words(sample, _symbol_codes(pomm.graph))
    ll, bad = kernels.batch_log_likelihood(flat, starts, lens, mults, labels, trans)
    return -math.inf if bad >= 0 else ll


def baum_welch(pomm: Pomm, sample: Sample, cfg: TrainConfig | None = None) -> Pomm:
    """Expectation-maximization reestimation of the transition mass.

    Returns a new process on the same graph; ``ll_history`` on the
    result holds the log-likelihood measured at the start of each
    iteration, a non-decreasing sequence.  Raises ZeroProbabilityWord
    if a sample word has no run through the current support.
    """
    cfg = cfg or TrainConfig()
    labels, trans = _pack_model(pomm)
    flat, starts, lens, mults, words = _pack_words(
        sample, _symbol_codes(pomm.graph)
    )
    history: list[float] = []
    for _ in range(cfg.max_iters):
        counts, ll, bad = kernels.batch_expected_counts(
            flat, starts, lens, mults, labels, trans
        )
        if bad >= 0:
            raise ZeroProbabilityWord(words[bad])
        prev = history[-1] if history else None
        history.append(ll)
        trans = _reestimate(counts, trans)
        if prev is not None:
            if abs(ll - prev) <= cfg.convergence_epsilon * max(1.0, abs(prev)):
                break
    out = Pomm(pomm.graph, _unpack_alpha(pomm.graph, trans))
    out.ll_history = history
    return out


def default_bw_iters(n_symbols: int) -> int:
    """Retraining budget per disambiguation step: 2 for small alphabets
    (at most 7 symbols), 3 beyond that.
    """
    return 2 if n_symbols <= 7 else 3


def _accepts_all(succ: list[set[int]], g: Koa, words) -> bool:
    for word in words:
        cur = {SRC}
        for sym in word:
            cur = {
                t for s in cur for t in succ[s] if t != SINK and g.label(t) == sym
            }
            if not cur:
                return False
        if not any(SINK in succ[s] for s in cur):
            return False
    return True


def disambiguate(
    pomm: Pomm, sample: Sample, bw_iters: int | float | None = None
) -> Koa:
    """Resolve same-labeled successor conflicts by trained mass.

    Walks the states in breadth-first order from the source's
    positive-mass successors.  Wherever a state has several successors
    with one label, the highest-mass one (ties to the smallest id)
    absorbs the whole label mass and the competing edges are deleted;
    after each deletion the process is retrained for ``bw_iters``
    expectation-maximization steps (pass ``math.inf`` to retrain to
    convergence) and the sample is re-checked for membership.  States
    the walk never reaches are swept afterwards with the same rule, so
    the result is deterministic everywhere.

    Raises DisambiguationFailed when a deletion makes some sample word
    unacceptable; callers treat that as a discarded restart.
    """
    g = pomm.graph
    if bw_iters is None:
        bw_iters = default_bw_iters(len(g.alphabet))
    labels, trans = _pack_model(pomm)
    flat, starts, lens, mults, words = _pack_words(sample, _symbol_codes(g))

    succ: list[set[int]] = [set() for _ in range(g.n_states)]
    for f, t in g.edges:
        succ[f].add(t)

    def conflicted(s: int) -> str | None:
        seen: dict[str, int] = {}
        for t in succ[s]:
            if t == SINK:
                continue
            seen[g.label(t)] = seen.get(g.label(t), 0) + 1
        hits = sorted(sym for sym, cnt in seen.items() if cnt > 1)
        return hits[0] if hits else None

    def retrain() -> None:
        nonlocal trans
        steps = 0
        prev = None
        while steps < bw_iters:
            counts, ll, bad = kernels.batch_expected_counts(
                flat, starts, lens, mults, labels, trans
            )
            if bad >= 0:
                raise DisambiguationFailed(
                    f"zero-probability word while retraining: "
                    f"{' '.join(words[bad]) or 'EPS'}"
                )
            trans = _reestimate(counts, trans)
            steps += 1
            if math.isinf(bw_iters):
                if steps >= 500 or (
                    prev is not None and abs(ll - prev) <= 1e-9 * max(1.0, abs(prev))
                ):
                    break
                prev = ll

    queue: deque[int] = deque(
        s for s in sorted(g.successors(SRC)) if s != SINK and trans[SRC, s] > 0.0
    )
    queued = set(queue)
    done: set[int] = set()
    while True:
        while queue:
            s = queue.popleft()
            queued.discard(s)
            while True:
                sym = conflicted(s)
                if sym is None:
                    break
                targets = sorted(
                    t for t in succ[s] if t != SINK and g.label(t) == sym
                )
                best = targets[0]
                for t in targets[1:]:
                    if trans[s, t] > trans[s, best]:
                        best = t
                mass = sum(trans[s, t] for t in targets)
                for t in targets:
                    if t != best:
                        succ[s].remove(t)
                        trans[s, t] = 0.0
                trans[s, best] = mass
                if bw_iters:
                    retrain()
                sums = trans.sum(axis=1)
                for st in range(g.n_states):
                    if st != SINK and succ[st] and abs(sums[st] - 1.0) > 1e-9:
                        raise AssertionError(
                            f"outgoing mass of state {st} drifted to {sums[st]!r}"
                        )
                if not _accepts_all(succ, g, words):
                    raise DisambiguationFailed(
                        f"pruning {sym!r} successors of state {s} rejects the sample"
                    )
            done.add(s)
            for t in sorted(succ[s]):
                if t != SINK and t not in done and t not in queued:
                    queue.append(t)
                    queued.add(t)
        leftovers = [
            s
            for s in range(g.n_states)
            if s != SINK and s not in done and conflicted(s) is not None
        ]
        if not leftovers:
            break
        queue.extend(leftovers)
        queued.update(leftovers)

    # rebuild, dropping states that no longer sit on a source->sink walk
    fwd = {SRC}
    stack = [SRC]
    while stack:
        for t in succ[stack.pop()]:
            if t not in fwd:
                fwd.add(t)
                stack.append(t)
    pred: list[set[int]] = [set() for _ in range(g.n_states)]
    for f in range(g.n_states):
        for t in succ[f]:
            pred[t].add(f)
    bwd = {SINK}
    stack = [SINK]
    while stack:
        for p in pred[stack.pop()]:
            if p not in bwd:
                bwd.add(p)
                stack.append(p)
    live = fwd & bwd
    kept = sorted(s for s in live if s >= 2)
    remap = {SRC: SRC, SINK: SINK}
    for new, old in enumerate(kept):
        remap[old] = new + 2
    edges = frozenset(
        (remap[f], remap[t])
        for f in live
        for t in succ[f]
        if f != SINK and t in live
    )
    out = Koa(tuple(g.label(s) for s in kept), edges)
    assert out.is_deterministic
    return out


def learn_koa(
    k: int,
    sample: Sample,
    rng=None,
    cfg: TrainConfig | None = None,
    bw_iters: int | float | None = None,
) -> Koa:
    """One learner restart: init, train, disambiguate, prune.

    Returns a deterministic automaton accepting every sample word, or
    raises DisambiguationFailed when this restart's trained mass cannot
    be disambiguated consistently (never happens for k=1, where the
    complete automaton is already deterministic).
    """
    pomm = init(k, sample, rng)
    pomm = baum_welch(pomm, sample, cfg)
    graph = disambiguate(pomm, sample, bw_iters)
    return prune(graph, sample)
