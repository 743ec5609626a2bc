"""Scaled forward-backward passes over packed word batches.

The hot numeric loops for training live here in two interchangeable
lanes: a numba-compiled one and a vectorized numpy one.  Importing with
``REXINFER_NO_NUMBA`` set (to anything non-empty) selects the numpy
lane; the numba lane also steps aside when numba is not importable.
Both lanes are exported under ``_numba``/``_numpy`` suffixes whenever
available, the unsuffixed names alias the selected lane, and the test
suite pins their agreement to ~1e-12.

Array convention (state ids are dense):

* state 0 is the source, state 1 the sink, labeled states from 2 up
* ``labels``: int64[m], symbol code per state, -1 for source and sink
* ``trans``: float64[m, m], row-stochastic over the graph's edges and
  exactly 0.0 elsewhere
* words are packed as one flat int64 stream of symbol codes with
  ``starts``/``lens`` offsets; a symbol outside the automaton's
  alphabet is coded -2, which matches no state and zeroes the word out
* ``mults``: float64[w], bag multiplicities weighting the counts

A word's probability is the sum over accepting source -> ... -> sink
walks of the product of ``trans`` along the walk.  Each position is
rescaled to sum 1 and the scale's log accumulated, so long words stay
clear of underflow; the log-likelihood reported by both kernels is the
sum of those logs.  A blocked word (no surviving walk) makes the kernel
return early with its batch index so the caller can name it.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "batch_log_likelihood",
    "batch_log_likelihood_numpy",
    "batch_expected_counts",
    "batch_expected_counts_numpy",
]

# Smallest admissible rescaling coefficient.  A positive but
# subnormal-range scale means the word is numerically unreachable, and
# dividing by it would overflow the backward pass into inf counts, so
# such words are reported as blocked rather than trained on.
SCALE_FLOOR = 1e-300


def _batch_log_likelihood_loop(flat, starts, lens, mults, labels, trans):
    m = trans.shape[0]
    total = 0.0
    cur = np.zeros(m)
    nxt = np.zeros(m)
    for w in range(starts.shape[0]):
        off = starts[w]
        n = lens[w]
        for s in range(m):
            cur[s] = 0.0
        cur[0] = 1.0
        logp = 0.0
        ok = True
        for t in range(n):
            sym = flat[off + t]
            c = 0.0
            for s2 in range(m):
                nxt[s2] = 0.0
            for s2 in range(2, m):
                if labels[s2] == sym:
                    acc = 0.0
                    for s in range(m):
                        if cur[s] > 0.0:
                            acc += cur[s] * trans[s, s2]
                    nxt[s2] = acc
                    c += acc
            if c < SCALE_FLOOR:
                ok = False
                break
            logp += np.log(c)
            for s in range(m):
                cur[s] = nxt[s] / c
        if not ok:
            return -np.inf, w
        cend = 0.0
        for s in range(m):
            cend += cur[s] * trans[s, 1]
        if cend < SCALE_FLOOR:
            return -np.inf, w
        total += mults[w] * (logp + np.log(cend))
    return total, -1


def _batch_expected_counts_loop(flat, starts, lens, mults, labels, trans):
    m = trans.shape[0]
    counts = np.zeros((m, m))
    total = 0.0
    for w in range(starts.shape[0]):
        off = starts[w]
        n = lens[w]
        mult = mults[w]
        if n == 0:
            p = trans[0, 1]
            if p < SCALE_FLOOR:
                return counts, -np.inf, w
            counts[0, 1] += mult
            total += mult * np.log(p)
            continue
        fwd = np.zeros((n + 1, m))
        fwd[0, 0] = 1.0
        scales = np.zeros(n)
        ok = True
        for t in range(n):
            sym = flat[off + t]
            c = 0.0
            for s2 in range(2, m):
                if labels[s2] == sym:
                    acc = 0.0
                    for s in range(m):
                        if fwd[t, s] > 0.0:
                            acc += fwd[t, s] * trans[s, s2]
                    fwd[t + 1, s2] = acc
                    c += acc
            if c < SCALE_FLOOR:
                ok = False
                break
            scales[t] = c
            for s2 in range(2, m):
                fwd[t + 1, s2] /= c
        if not ok:
            return counts, -np.inf, w
        cend = 0.0
        for s in range(m):
            cend += fwd[n, s] * trans[s, 1]
        if cend < SCALE_FLOOR:
            return counts, -np.inf, w
        logp = np.log(cend)
        for t in range(n):
            logp += np.log(scales[t])
        total += mult * logp
        # backward pass, rescaled by the same coefficients: at entry to
        # step t the vector holds the tail weight of positions t+1..n
        bwd = np.zeros(m)
        for s in range(m):
            bwd[s] = trans[s, 1] / cend
            counts[s, 1] += mult * fwd[n, s] * bwd[s]
        for t in range(n - 1, -1, -1):
            sym = flat[off + t]
            nxt = np.zeros(m)
            inv = 1.0 / scales[t]
            for s2 in range(2, m):
                if labels[s2] == sym and bwd[s2] != 0.0:
                    tail = bwd[s2] * inv
                    for s in range(m):
                        a = trans[s, s2]
                        if a > 0.0:
                            counts[s, s2] += mult * fwd[t, s] * a * tail
                            nxt[s] += a * tail
            bwd = nxt
    return counts, total, -1


def batch_log_likelihood_numpy(flat, starts, lens, mults, labels, trans):
    """Multiplicity-weighted log-likelihood of a packed word batch.

    Returns ``(loglik, bad)`` where ``bad`` is -1 on success or the
    batch index of the first zero-probability word (then the first
    element is -inf).
    """
    m = trans.shape[0]
    total = 0.0
    for w in range(starts.shape[0]):
        codes = flat[starts[w] : starts[w] + lens[w]]
        cur = np.zeros(m)
        cur[0] = 1.0
        logp = 0.0
        ok = True
        for sym in codes:
            nxt = (cur @ trans) * (labels == sym)
            c = nxt.sum()
            if c < SCALE_FLOOR:
                ok = False
                break
            logp += np.log(c)
            cur = nxt / c
        if not ok:
            return -np.inf, w
        cend = cur @ trans[:, 1]
        if cend < SCALE_FLOOR:
            return -np.inf, w
        total += mults[w] * (logp + np.log(cend))
    return total, -1


def batch_expected_counts_numpy(flat, starts, lens, mults, labels, trans):
    """One expectation step: per-edge posterior usage counts.

    Returns ``(counts, loglik, bad)``: an m-by-m matrix of expected
    transition counts weighted by word multiplicity, the batch
    log-likelihood under the current ``trans``, and -1 or the index of
    the first zero-probability word.
    """
    m = trans.shape[0]
    counts = np.zeros((m, m))
    total = 0.0
    for w in range(starts.shape[0]):
        n = int(lens[w])
        mult = mults[w]
        codes = flat[starts[w] : starts[w] + n]
        if n == 0:
            p = trans[0, 1]
            if p < SCALE_FLOOR:
                return counts, -np.inf, w
            counts[0, 1] += mult
            total += mult * np.log(p)
            continue
        fwd = np.zeros((n + 1, m))
        fwd[0, 0] = 1.0
        scales = np.empty(n)
        ok = True
        for t in range(n):
            vec = (fwd[t] @ trans) * (labels == codes[t])
            c = vec.sum()
            if c < SCALE_FLOOR:
                ok = False
                break
            scales[t] = c
            fwd[t + 1] = vec / c
        if not ok:
            return counts, -np.inf, w
        cend = fwd[n] @ trans[:, 1]
        if cend < SCALE_FLOOR:
            return counts, -np.inf, w
        total += mult * (np.log(scales).sum() + np.log(cend))
        bwd = trans[:, 1] / cend
        counts[:, 1] += mult * fwd[n] * bwd
        for t in range(n - 1, -1, -1):
            tail = (labels == codes[t]) * bwd
            counts += (mult / scales[t]) * np.outer(fwd[t], tail) * trans
            bwd = (trans @ tail) / scales[t]
    return counts, total, -1


USING_NUMBA = False
batch_log_likelihood_numba = None
batch_expected_counts_numba = None

try:
    from numba import njit
except ImportError:
    njit = None

if njit is not None:
    batch_log_likelihood_numba = njit(cache=True, nogil=True)(
        _batch_log_likelihood_loop
    )
    batch_expected_counts_numba = njit(cache=True, nogil=True)(
        _batch_expected_counts_loop
    )
    USING_NUMBA = not os.environ.get("REXINFER_NO_NUMBA")

if USING_NUMBA:
    batch_log_likelihood = batch_log_likelihood_numba
    batch_expected_counts = batch_expected_counts_numba
else:
    batch_log_likelihood = batch_log_likelihood_numpy
    batch_expected_counts = batch_expected_counts_numpy
