"""Timing comparison of the two forward-backward kernel lanes.

``rexinfer.kernels`` ships each hot loop twice: a numba ``@njit``
version and a pure-numpy fallback (the package picks the numba lane at
import time unless numba is missing or ``REXINFER_NO_NUMBA`` is set).
This script times both lanes side by side on word batches produced by
the package's own generator, printing the best wall time over a few
repeats and the resulting speedup.  The numba lane gets one untimed
warmup call per kernel so compilation stays out of the numbers, and
both lanes are checked against each other for numeric agreement before
anything is timed.

Run from the repository root after an editable install:

    python3 benchmarks/bench_baum_welch.py
    python3 benchmarks/bench_baum_welch.py --repeats 7 --words 1200

When numba is unavailable only the numpy column is reported.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from rexinfer.generate import GenConfig, covering_sample, gen_expression
from rexinfer.kernels import (
    USING_NUMBA,
    batch_expected_counts_numba,
    batch_expected_counts_numpy,
    batch_log_likelihood_numba,
    batch_log_likelihood_numpy,
)
from rexinfer.training import _pack_model, _pack_words, _symbol_codes, init

ALPHABET = "abcdefgh"


def build_workload(alphabet_size: int, k: int, words: int, seed: int):
    """A packed (labels, trans, batch) triple from a random target.

    The target expression, a covering sample padded to ``words`` draws,
    and the initial process on the sample's complete automaton all come
    from the same code paths training uses, so the timed shapes match
    what ``baum_welch`` actually feeds the kernels.
    """
    rng = np.random.default_rng(seed)
    cfg = GenConfig(
        alphabet=tuple(ALPHABET[:alphabet_size]),
        per_symbol_occurrences=(2,) * alphabet_size,
    )
    target = gen_expression(cfg, rng)
    sample = covering_sample(target, rng, size=words)
    pomm = init(k, sample, rng)
    labels, trans = _pack_model(pomm)
    flat, starts, lens, mults, _ = _pack_words(sample, _symbol_codes(pomm.graph))
    return labels, trans, (flat, starts, lens, mults), sample


def best_time(fn, batch, labels, trans, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*batch, labels, trans)
        best = min(best, time.perf_counter() - t0)
    return best


def check_agreement(batch, labels, trans) -> None:
    ll_np, bad_np = batch_log_likelihood_numpy(*batch, labels, trans)
    ll_nb, bad_nb = batch_log_likelihood_numba(*batch, labels, trans)
    counts_np, cll_np, _ = batch_expected_counts_numpy(*batch, labels, trans)
    counts_nb, cll_nb, _ = batch_expected_counts_numba(*batch, labels, trans)
    assert bad_np == bad_nb, (bad_np, bad_nb)
    assert np.isclose(ll_np, ll_nb), (ll_np, ll_nb)
    assert np.isclose(cll_np, cll_nb), (cll_np, cll_nb)
    assert np.allclose(counts_np, counts_nb), "expected-count matrices differ"


def main() -> None:
    ap = argparse.ArgumentParser(
        description="compare the numba and numpy forward-backward kernels"
    )
    ap.add_argument(
        "--repeats", type=int, default=5, help="timed runs per cell, best is kept"
    )
    ap.add_argument(
        "--words", type=int, default=400, help="words per generated batch"
    )
    ap.add_argument("--seed", type=int, default=0, help="workload generator seed")
    args = ap.parse_args()

    if not USING_NUMBA:
        print(
            "numba lane unavailable (numba not installed or REXINFER_NO_NUMBA"
            " was set); timing the numpy lane only"
        )

    workloads = [
        ("3 symbols, k=1", 3, 1),
        ("3 symbols, k=2", 3, 2),
        ("5 symbols, k=3", 5, 3),
        ("8 symbols, k=4", 8, 4),
    ]
    kernels = [
        ("log-likelihood", batch_log_likelihood_numpy, batch_log_likelihood_numba),
        ("expected-counts", batch_expected_counts_numpy, batch_expected_counts_numba),
    ]

    header = f"{'workload':<16} {'kernel':<16} {'states':>6} {'symbols':>8}"
    header += f" {'numpy':>10}"
    if USING_NUMBA:
        header += f" {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, alphabet_size, k in workloads:
        labels, trans, batch, sample = build_workload(
            alphabet_size, k, args.words, args.seed
        )
        n_states = trans.shape[0]
        n_symbols = int(batch[2].sum())
        if USING_NUMBA:
            for _, _, fn_nb in kernels:
                fn_nb(*batch, labels, trans)  # compile before timing
            check_agreement(batch, labels, trans)
        for kname, fn_np, fn_nb in kernels:
            t_np = best_time(fn_np, batch, labels, trans, args.repeats)
            row = f"{name:<16} {kname:<16} {n_states:>6} {n_symbols:>8}"
            row += f" {t_np * 1e3:>8.2f}ms"
            if USING_NUMBA:
                t_nb = best_time(fn_nb, batch, labels, trans, args.repeats)
                row += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
            print(row)


if __name__ == "__main__":
    main()
