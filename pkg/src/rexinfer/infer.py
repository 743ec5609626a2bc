"""Top-level inference drivers.

``idregex`` runs the full pipeline: a grid of EM restarts per occurrence
bound k, each producing a candidate expression, scored and reduced to a
single winner.  ``oracle_learn`` is the enumerative learner for tiny
alphabets: it materializes every normal-form deterministic expression up
to a length budget and returns the most specific consistent one.
``prefix_tree_expression`` is the exact fallback for finite languages.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .automaton import Sample
from .glushkov import accepts, count_words, equivalent, is_deterministic
from .measures import Candidate, best, make_candidate
from .regex import (
    EPSILON,
    Epsilon,
    Opt,
    Plus,
    Regex,
    Sym,
    concat,
    disj,
    expr_length,
    normalize,
    render,
    simplify,
)
from .rewrite import koa_to_kore
from .training import (
    DisambiguationFailed,
    TrainConfig,
    ZeroProbabilityWord,
    default_bw_iters,
    learn_koa,
)

__all__ = ["idregex", "oracle_learn", "prefix_tree_expression"]

log = logging.getLogger(__name__)


def _thread_count() -> int:
    raw = os.environ.get("REXINFER_THREADS", "").strip()
    if raw:
        return max(1, int(raw))
    return 1


def idregex(
    sample: Sample,
    kmax: int = 4,
    restarts: int = 10,
    bw_iters: int | float | None = None,
    measure: str = "size",
    rng: int | None = None,
    bw_epsilon: float | None = None,
) -> tuple[Candidate, dict]:
    """Infer a concise deterministic expression for ``sample``.

    For every occurrence bound k up to ``kmax``, ``restarts`` training
    runs are attempted with independently derived seeds.  Each run that
    survives disambiguation is translated to an expression, simplified,
    and kept if deterministic; equivalent results are merged.  The
    winner under ``measure`` is returned together with a report of what
    every run did.  The result is reproducible for a fixed ``rng`` and
    never empty: k=1 runs cannot fail and translate to expressions with
    one occurrence per symbol, which are always deterministic.

    ``bw_iters`` is the retraining budget after each disambiguation
    deletion; it defaults by alphabet size.  ``bw_epsilon`` overrides
    the relative convergence threshold of the initial training runs.
    ``REXINFER_THREADS``
    controls how many restarts run concurrently (default 1); the report
    does not depend on scheduling.
    """
    words = sample.distinct_words()
    if not words:
        raise ValueError("sample is empty")
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    if bw_iters is None:
        bw_iters = default_bw_iters(len(sample.alphabet()))
    cfg = TrainConfig() if bw_epsilon is None else TrainConfig(convergence_epsilon=bw_epsilon)

    children = np.random.SeedSequence(rng).spawn(kmax * restarts)
    jobs = [
        (k, i, children[(k - 1) * restarts + i])
        for k in range(1, kmax + 1)
        for i in range(restarts)
    ]

    def run_one(job):
        k, i, child = job
        try:
            graph = learn_koa(
                k,
                sample,
                rng=np.random.default_rng(child),
                cfg=cfg,
                bw_iters=bw_iters,
            )
        except (ZeroProbabilityWord, DisambiguationFailed) as exc:
            return (k, i, "failed", str(exc))
        expr = simplify(koa_to_kore(graph))
        if not is_deterministic(expr):
            return (k, i, "nondeterministic", render(expr))
        return (k, i, "ok", expr)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, jobs))
    else:
        outcomes = [run_one(job) for job in jobs]
    outcomes.sort(key=lambda row: (row[0], row[1]))

    per_k = {
        k: {"succeeded": 0, "failed": 0, "nondeterministic": 0, "failures": [], "expressions": []}
        for k in range(1, kmax + 1)
    }
    kept: list[tuple[Regex, int]] = []
    for k, _, status, payload in outcomes:
        row = per_k[k]
        if status == "failed":
            row["failed"] += 1
            row["failures"].append(payload)
        elif status == "nondeterministic":
            row["nondeterministic"] += 1
        else:
            row["succeeded"] += 1
            row["expressions"].append(render(payload))
            _merge_candidate(kept, payload, k)

    candidates = [make_candidate(expr, k, sample) for expr, k in kept]
    for cand in candidates:
        for word in words:
            if not accepts(cand.expr, word):
                raise AssertionError(
                    f"candidate {render(cand.expr)} rejects sample word"
                    f" {' '.join(word) or 'EPS'}"
                )
    chosen = best(candidates, measure)

    report = {
        "alphabet": sorted(sample.alphabet()),
        "words": len(words),
        "kmax": kmax,
        "restarts": restarts,
        "bw_iters": bw_iters if bw_iters != float("inf") else "converge",
        "bw_epsilon": cfg.convergence_epsilon,
        "measure": measure,
        "seed": rng,
        "per_k": per_k,
        "candidates": [
            {
                "expr": render(c.expr),
                "k": c.k,
                "language_size": c.language_size,
                "mdl_cost": c.mdl_cost,
                "expr_length": c.expr_length,
            }
            for c in candidates
        ],
        "chosen": render(chosen.expr),
    }
    return chosen, report


def _merge_candidate(kept: list[tuple[Regex, int]], expr: Regex, k: int) -> None:
    """Add expr to the pool unless an equivalent entry exists; equivalent
    entries keep the shorter rendering and the smaller k."""
    new_key = (expr_length(expr), render(expr))
    for idx, (old, old_k) in enumerate(kept):
        if equivalent(old, expr):
            if new_key < (expr_length(old), render(old)):
                kept[idx] = (expr, min(old_k, k))
            else:
                kept[idx] = (old, min(old_k, k))
            return
    kept.append((expr, k))


# ---------------------------------------------------------------------------
# enumerative learner
# ---------------------------------------------------------------------------

_WRAPS = (lambda e: e, Opt, Plus, lambda e: Opt(Plus(e)))


def _all_kores(alphabet: tuple[str, ...], k: int, budget: int) -> list[Regex]:
    """Every normal-form expression over ``alphabet`` with at most k
    occurrences per symbol and length within budget.

    Built bottom-up over exact occurrence vectors; disjunction parts are
    kept in rendered order since their order never changes the language.
    """
    memo: dict[tuple[int, ...], frozenset[Regex]] = {}

    def build(occ: tuple[int, ...]) -> frozenset[Regex]:
        if occ in memo:
            return memo[occ]
        out: set[Regex] = set()
        total = sum(occ)
        if total == 1:
            base: list[Regex] = [Sym(alphabet[occ.index(1)])]
        else:
            base = []
            for left in _proper_splits(occ):
                right = tuple(o - l for o, l in zip(occ, left))
                for lhs in build(left):
                    for rhs in build(right):
                        base.append(concat([lhs, rhs]))
                        if render(lhs) < render(rhs):
                            base.append(disj([lhs, rhs]))
        for e in base:
            for wrap in _WRAPS:
                candidate = normalize(wrap(e))
                if expr_length(candidate) <= budget:
                    out.add(candidate)
        frozen = frozenset(out)
        memo[occ] = frozen
        return frozen

    pool: set[Regex] = set()
    for occ in _occurrence_vectors(len(alphabet), k):
        pool |= build(occ)
    return sorted(pool, key=render)


def _occurrence_vectors(n_symbols: int, k: int):
    def rec(i):
        if i == n_symbols:
            yield ()
            return
        for rest in rec(i + 1):
            for c in range(k + 1):
                yield (c,) + rest

    for vec in rec(0):
        if any(vec):
            yield vec


def _proper_splits(occ: tuple[int, ...]):
    """Nonzero strict sub-vectors of an occurrence vector."""
    def rec(i):
        if i == len(occ):
            yield ()
            return
        for rest in rec(i + 1):
            for c in range(occ[i] + 1):
                yield (c,) + rest

    for vec in rec(0):
        if any(vec) and vec != occ:
            yield vec


def oracle_learn(
    sample: Sample, k: int = 1, budget: int | None = None
) -> Regex:
    """Most specific consistent expression found by exhaustive search.

    Enumerates every deterministic normal-form expression over the
    sample's alphabet with at most k occurrences per symbol and length
    at most ``budget``, orders the pool by how few words each accepts up
    to a shared length bound (ties to shorter, then by rendering), and
    returns the first one accepting the whole sample.  Exponential in
    alphabet size, hence the guards.  When nothing in the pool is
    consistent the exact prefix-tree expression is returned instead.
    """
    alphabet = tuple(sorted(sample.alphabet()))
    if len(alphabet) > 3:
        raise ValueError("enumerative learning needs an alphabet of at most 3 symbols")
    if not 1 <= k <= 2:
        raise ValueError("enumerative learning supports k = 1 or 2 only")
    cap = 10 * k * len(alphabet)
    if budget is None:
        budget = cap
    if budget > cap:
        raise ValueError(f"budget {budget} exceeds the normal-form bound {cap}")

    shared_bound = 2 * budget + 1
    scored = []
    for expr in _all_kores(alphabet, k, budget):
        if not is_deterministic(expr):
            continue
        scored.append((sum(count_words(expr, shared_bound)), expr_length(expr), render(expr), expr))
    scored.sort(key=lambda row: row[:3])

    words = sample.distinct_words()
    for _, _, _, expr in scored:
        if all(accepts(expr, w) for w in words):
            return expr
    log.warning(
        "no consistent expression with at most %d occurrences per symbol "
        "within length %d; falling back to the prefix tree",
        k,
        budget,
    )
    return prefix_tree_expression(sample)


# ---------------------------------------------------------------------------
# prefix tree
# ---------------------------------------------------------------------------

def prefix_tree_expression(sample: Sample) -> Regex:
    """Deterministic expression accepting exactly the sample's words.

    Words are laid out as a trie; each node becomes the disjunction of
    its children's branches, wrapped in ``?`` when a word ends there.
    Distinct child labels keep the result deterministic.
    """
    words = sample.distinct_words()
    if not words:
        raise ValueError("sample is empty")

    tree: dict = {}
    ACCEPT = object()
    for word in words:
        node = tree
        for sym in word:
            node = node.setdefault(sym, {})
        node[ACCEPT] = True

    def emit(node: dict) -> Regex:
        parts = []
        for sym in sorted(s for s in node if s is not ACCEPT):
            sub = emit(node[sym])
            parts.append(Sym(sym) if isinstance(sub, Epsilon) else concat([Sym(sym), sub]))
        if not parts:
            return EPSILON
        body = disj(parts)
        return Opt(body) if ACCEPT in node else body

    return simplify(emit(tree))
