"""Independent oracles used to cross-check the library.

Nothing in here goes through the automaton pipeline: membership is decided
by a memoized span matcher over the AST, and language counting by explicit
enumeration.  Slow, but trustworthy.
"""

from __future__ import annotations

import itertools

from rexinfer.regex import Concat, Disj, Empty, Epsilon, Opt, Plus, Regex, Sym

Word = tuple[str, ...]


def naive_accepts(e: Regex, word: Word) -> bool:
    """Recursive-descent membership, independent of any automaton code."""
    memo: dict[tuple[int, int, int], bool] = {}
    ids: dict[int, object] = {}

    def key(x) -> int:
        i = id(x)
        ids[i] = x  # keep alive so ids stay stable
        return i

    def match(x: Regex, i: int, j: int) -> bool:
        k = (key(x), i, j)
        if k in memo:
            return memo[k]
        if isinstance(x, Empty):
            r = False
        elif isinstance(x, Epsilon):
            r = i == j
        elif isinstance(x, Sym):
            r = j == i + 1 and word[i] == x.name
        elif isinstance(x, Opt):
            r = i == j or match(x.inner, i, j)
        elif isinstance(x, Plus):
            r = match(x.inner, i, j)
            if not r:
                # first block consumes at least one letter
                r = any(
                    match(x.inner, i, t) and match(x, t, j)
                    for t in range(i + 1, j)
                )
        elif isinstance(x, Concat):
            r = match_seq(x.parts, 0, i, j)
        elif isinstance(x, Disj):
            r = any(match(p, i, j) for p in x.parts)
        else:
            raise TypeError(x)
        memo[k] = r
        return r

    seq_memo: dict[tuple[int, int, int, int], bool] = {}

    def match_seq(parts: tuple[Regex, ...], p: int, i: int, j: int) -> bool:
        if p == len(parts):
            return i == j
        if p == len(parts) - 1:
            return match(parts[p], i, j)
        k = (key(parts), p, i, j)
        if k in seq_memo:
            return seq_memo[k]
        r = any(
            match(parts[p], i, t) and match_seq(parts, p + 1, t, j)
            for t in range(i, j + 1)
        )
        seq_memo[k] = r
        return r

    return match(e, 0, len(word))


def words_up_to(alphabet, n: int):
    """All words over alphabet with length <= n, shortest first."""
    syms = sorted(alphabet)
    for length in range(n + 1):
        for w in itertools.product(syms, repeat=length):
            yield w


def enumerate_language(e: Regex, alphabet, n: int) -> set[Word]:
    """Brute-force language slice: every accepted word of length <= n."""
    return {w for w in words_up_to(alphabet, n) if naive_accepts(e, w)}


def count_by_length(e: Regex, alphabet, n: int) -> list[int]:
    """Brute-force counterpart of count_words."""
    counts = [0] * (n + 1)
    for w in enumerate_language(e, alphabet, n):
        counts[len(w)] += 1
    return counts
