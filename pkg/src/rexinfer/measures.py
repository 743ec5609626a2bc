"""Scoring inferred expressions: bounded language size and an MDL cost.

Every candidate the pipeline produces already accepts the whole sample,
so "better" means "accepts less junk".  Two measures capture that:

* language size: the number of words the expression accepts up to a
  length horizon.  The horizon for a single expression is ``2*m + 1``
  where ``m`` counts its symbol occurrences; when ranking several
  candidates against each other, :func:`best` counts every language up
  to the largest horizon in the pool so the totals are comparable.
* MDL cost: expression length plus the number of bits needed to point
  out the sample inside the language, one length class at a time.

All counts are exact (arbitrary-precision integers); only the MDL
binomials go through floating point, via log-gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .automaton import Sample
from .glushkov import count_words, is_deterministic
from .regex import Regex, atoms, expr_length, render

__all__ = [
    "Candidate",
    "best",
    "horizon",
    "language_size",
    "make_candidate",
    "mdl_cost",
]


def horizon(r: Regex) -> int:
    """Counting horizon for ``r``: twice its symbol occurrences plus one.

    Long enough that every symbol occurrence can participate in a word
    and repetitions show up in the count.
    """
    return 2 * len(atoms(r)) + 1


def _require_deterministic(r: Regex) -> None:
    if not is_deterministic(r):
        raise ValueError(f"expression is not deterministic: {render(r)}")


def language_size(r: Regex, n: int | None = None) -> int:
    """Number of words of length at most ``n`` accepted by ``r``.

    ``n`` defaults to ``horizon(r)``.  ``r`` must be deterministic; the
    count is exact.
    """
    _require_deterministic(r)
    if n is None:
        n = horizon(r)
    return sum(count_words(r, n))


def _log2_binomial(total: int, chosen: int) -> float:
    if chosen == 0 or chosen == total:
        return 0.0
    return (
        math.lgamma(total + 1) - math.lgamma(chosen + 1) - math.lgamma(total - chosen + 1)
    ) / math.log(2.0)


def mdl_cost(r: Regex, sample: Sample) -> float:
    """Description length of ``sample`` under ``r``, plus model cost.

    The data part charges, per word length ``i`` up to ``horizon(r)``,
    ``2*log2(i)`` bits to state the length (zero at ``i = 0``) plus
    ``log2 C(|L_i|, |S_i|)`` bits to pick the sample's distinct words
    ``S_i`` of that length out of the language's ``L_i``.  Length
    classes the sample does not touch cost nothing.  The model part is
    the length of the expression itself.

    Raises ValueError if some length class holds more sample words than
    the language has, i.e. the sample is not contained in the language.
    """
    n = horizon(r)
    per_length = count_words(r, n)
    sample_classes: dict[int, int] = {}
    for word in sample.distinct_words():
        length = len(word)
        sample_classes[length] = sample_classes.get(length, 0) + 1
    data = 0.0
    for i, s_i in sorted(sample_classes.items()):
        if i > n:
            continue
        l_i = per_length[i]
        if s_i > l_i:
            raise ValueError(
                f"sample has {s_i} words of length {i} but the language has {l_i}"
            )
        length_bits = 2.0 * math.log2(i) if i > 0 else 0.0
        data += length_bits + _log2_binomial(l_i, s_i)
    return data + expr_length(r)


@dataclass(frozen=True)
class Candidate:
    """One scored inference result.

    ``language_size`` is counted at the expression's own horizon;
    ``best`` recounts at a shared horizon when ranking, so pools of
    candidates with different sizes compare fairly.
    """

    expr: Regex
    k: int
    language_size: int
    mdl_cost: float
    expr_length: int


def make_candidate(expr: Regex, k: int, sample: Sample) -> Candidate:
    """Score ``expr`` against ``sample`` and wrap it as a Candidate."""
    return Candidate(
        expr=expr,
        k=k,
        language_size=language_size(expr),
        mdl_cost=mdl_cost(expr, sample),
        expr_length=expr_length(expr),
    )


def best(candidates: list[Candidate], measure: str = "size") -> Candidate:
    """Pick the winning candidate under ``measure`` ("size" or "mdl").

    Size compares language sizes counted up to the largest horizon in
    the pool.  Ties fall to the shorter expression, then to the
    lexicographically smaller rendering, so the result never depends on
    input order.
    """
    if not candidates:
        raise ValueError("no candidates to choose from")
    if measure == "size":
        shared = max(horizon(c.expr) for c in candidates)
        score = {id(c): sum(count_words(c.expr, shared)) for c in candidates}
        key = lambda c: (score[id(c)], c.expr_length, render(c.expr))
    elif measure == "mdl":
        key = lambda c: (c.mdl_cost, c.expr_length, render(c.expr))
    else:
        raise ValueError(f"unknown measure: {measure!r}")
    return min(candidates, key=key)
