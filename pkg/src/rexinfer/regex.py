"""Regular expression ASTs and the syntactic toolbox around them.

The dialect is deliberately small: symbols, concatenation, disjunction,
``?`` and ``+``.  Kleene star exists only as surface syntax; ``r*`` parses
to ``(r+)?``.  Concatenation and disjunction are kept n-ary and flattened,
so the associativity rewrites hold by construction.

Symbols are plain strings.  A marked symbol (the i-th occurrence of ``a``)
is spelled ``a#i``; marking and stripping are string operations on the
atom names, which keeps words and automaton labels free of wrapper types.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass
from fractions import Fraction


class Regex:
    """Base class for expression nodes. All nodes are immutable."""

    __slots__ = ()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({render(self)!r})"


@dataclass(frozen=True, repr=False, slots=True)
class Empty(Regex):
    """The empty language."""


@dataclass(frozen=True, repr=False, slots=True)
class Epsilon(Regex):
    """The language containing only the empty word."""


@dataclass(frozen=True, repr=False, slots=True)
class Sym(Regex):
    name: str


@dataclass(frozen=True, repr=False, slots=True)
class Concat(Regex):
    parts: tuple[Regex, ...]

    def __post_init__(self) -> None:
        if len(self.parts) < 2:
            raise ValueError("Concat needs at least two parts")


@dataclass(frozen=True, repr=False, slots=True)
class Disj(Regex):
    parts: tuple[Regex, ...]

    def __post_init__(self) -> None:
        if len(self.parts) < 2:
            raise ValueError("Disj needs at least two parts")


@dataclass(frozen=True, repr=False, slots=True)
class Opt(Regex):
    inner: Regex


@dataclass(frozen=True, repr=False, slots=True)
class Plus(Regex):
    inner: Regex


EMPTY = Empty()
EPSILON = Epsilon()


def concat(parts) -> Regex:
    """N-ary concatenation; flattens nested Concat nodes."""
    flat: list[Regex] = []
    for p in parts:
        if isinstance(p, Concat):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return EPSILON
    if len(flat) == 1:
        return flat[0]
    return Concat(tuple(flat))


def disj(parts) -> Regex:
    """N-ary disjunction; flattens nested Disj nodes."""
    flat: list[Regex] = []
    for p in parts:
        if isinstance(p, Disj):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return EMPTY
    if len(flat) == 1:
        return flat[0]
    return Disj(tuple(flat))


# ---------------------------------------------------------------------------
# marked symbols
# ---------------------------------------------------------------------------

def marked(name: str, index: int) -> str:
    return f"{name}#{index}"


def strip_symbol(sym: str) -> str:
    """Base name of a possibly marked symbol: strip_symbol('a#2') == 'a'."""
    return sym.partition("#")[0]


def mark_index(sym: str) -> int:
    """Occurrence index of a marked symbol, 0 if unmarked."""
    _, sep, idx = sym.partition("#")
    return int(idx) if sep else 0


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    pass


_TOKEN_RE = _re.compile(r"[A-Za-z_][A-Za-z0-9_-]*(?:#[1-9][0-9]*)?")
_WS_RE = _re.compile(r"\s+")


def _tokenize(text: str) -> list[str]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        m = _WS_RE.match(text, i)
        if m:
            i = m.end()
            continue
        c = text[i]
        if c in "()|?+*":
            toks.append(c)
            i += 1
            continue
        if c in ("ε", "∅"):
            toks.append(c)
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {c!r} at position {i}")
        toks.append(m.group())
        i = m.end()
    return toks


class _Parser:
    def __init__(self, toks: list[str]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self) -> str:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expr(self) -> Regex:
        parts = [self.concatenation()]
        while self.peek() == "|":
            self.take()
            parts.append(self.concatenation())
        return disj(parts)

    def concatenation(self) -> Regex:
        parts = [self.postfix()]
        while self.peek() not in (None, "|", ")"):
            parts.append(self.postfix())
        return concat(parts)

    def postfix(self) -> Regex:
        e = self.primary()
        while self.peek() in ("?", "+", "*"):
            op = self.take()
            if op == "?":
                e = Opt(e)
            elif op == "+":
                e = Plus(e)
            else:  # r* is sugar for (r+)?
                e = Opt(Plus(e))
        return e

    def primary(self) -> Regex:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        if tok == "(":
            self.take()
            e = self.expr()
            if self.peek() != ")":
                raise ParseError("missing closing parenthesis")
            self.take()
            return e
        if tok in ("ε", "EPS"):
            self.take()
            return EPSILON
        if tok in ("∅", "EMPTY"):
            self.take()
            return EMPTY
        if tok in (")", "|", "?", "+", "*"):
            raise ParseError(f"unexpected token {tok!r}")
        return Sym(self.take())


def parse(text: str) -> Regex:
    """Parse the surface syntax: ``|`` for disjunction, juxtaposition for
    concatenation, postfix ``? + *``, tokens separated by whitespace.
    """
    p = _Parser(_tokenize(text))
    if p.peek() is None:
        raise ParseError("empty expression")
    e = p.expr()
    if p.peek() is not None:
        raise ParseError(f"trailing input at token {p.pos}: {p.peek()!r}")
    return e


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _atomic(e: Regex) -> bool:
    return isinstance(e, (Sym, Empty, Epsilon))


def render(e: Regex) -> str:
    """Inverse of parse: parse(render(e)) reproduces e exactly."""
    if isinstance(e, Empty):
        return "EMPTY"
    if isinstance(e, Epsilon):
        return "EPS"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, (Opt, Plus)):
        op = "?" if isinstance(e, Opt) else "+"
        inner = render(e.inner)
        if _atomic(e.inner):
            return inner + op
        return f"({inner}){op}"
    if isinstance(e, Concat):
        out = []
        for p in e.parts:
            s = render(p)
            out.append(f"({s})" if isinstance(p, Disj) else s)
        return " ".join(out)
    if isinstance(e, Disj):
        return " | ".join(render(p) for p in e.parts)
    raise TypeError(f"not a Regex: {e!r}")


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------

def atoms(e: Regex) -> list[Sym]:
    """Symbol occurrences in left-to-right order."""
    out: list[Sym] = []

    def walk(x: Regex) -> None:
        if isinstance(x, Sym):
            out.append(x)
        elif isinstance(x, (Concat, Disj)):
            for p in x.parts:
                walk(p)
        elif isinstance(x, (Opt, Plus)):
            walk(x.inner)

    walk(e)
    return out


@dataclass(frozen=True)
class ExprStats:
    occ: int
    alphabet: frozenset[str]
    k: int
    kappa: Fraction | None


def stats(e: Regex) -> ExprStats:
    """Occurrence count, alphabet, max occurrences of any one symbol, and
    the occurrence ratio occ/|alphabet| (None for symbol-free expressions).
    """
    names = [a.name for a in atoms(e)]
    alpha = frozenset(names)
    per = {s: names.count(s) for s in alpha}
    k = max(per.values()) if per else 0
    kappa = Fraction(len(names), len(alpha)) if alpha else None
    return ExprStats(occ=len(names), alphabet=alpha, k=k, kappa=kappa)


def expr_length(e: Regex) -> int:
    """Expression length in operator-explicit notation: one unit per symbol
    occurrence, per unary operator, per binary operator between adjacent
    parts, and per parenthesis around an n-ary child of an operator.
    Stacked unary operators need no parentheses, e.g. (a b)+? has length 6.
    """
    if _atomic(e):
        return 1
    if isinstance(e, (Opt, Plus)):
        inner = expr_length(e.inner)
        parens = 2 if isinstance(e.inner, (Concat, Disj)) else 0
        return inner + parens + 1
    if isinstance(e, Concat):
        total = len(e.parts) - 1
        for p in e.parts:
            total += expr_length(p) + (2 if isinstance(p, Disj) else 0)
        return total
    if isinstance(e, Disj):
        return sum(expr_length(p) for p in e.parts) + len(e.parts) - 1
    raise TypeError(f"not a Regex: {e!r}")


# ---------------------------------------------------------------------------
# marking / stripping
# ---------------------------------------------------------------------------

def mark(e: Regex) -> Regex:
    """Replace the i-th occurrence of each symbol a by a#i, left to right."""
    seen: dict[str, int] = {}

    def walk(x: Regex) -> Regex:
        if isinstance(x, Sym):
            if mark_index(x.name):
                raise ValueError(f"already marked: {x.name}")
            i = seen.get(x.name, 0) + 1
            seen[x.name] = i
            return Sym(marked(x.name, i))
        if isinstance(x, Concat):
            return Concat(tuple(walk(p) for p in x.parts))
        if isinstance(x, Disj):
            return Disj(tuple(walk(p) for p in x.parts))
        if isinstance(x, Opt):
            return Opt(walk(x.inner))
        if isinstance(x, Plus):
            return Plus(walk(x.inner))
        return x

    return walk(e)


def strip(e: Regex) -> Regex:
    """Drop occurrence marks: strip(mark(e)) == e."""
    if isinstance(e, Sym):
        return Sym(strip_symbol(e.name))
    if isinstance(e, Concat):
        return Concat(tuple(strip(p) for p in e.parts))
    if isinstance(e, Disj):
        return Disj(tuple(strip(p) for p in e.parts))
    if isinstance(e, Opt):
        return Opt(strip(e.inner))
    if isinstance(e, Plus):
        return Plus(strip(e.inner))
    return e


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def _simplify_once(e: Regex) -> Regex:
    if _atomic(e):
        return e
    if isinstance(e, Opt):
        inner = _simplify_once(e.inner)
        if isinstance(inner, Opt):  # r?? -> r?
            return inner
        # (r1? r2? ... rn?)? -> r1? r2? ... rn?
        if isinstance(inner, Concat) and all(isinstance(p, Opt) for p in inner.parts):
            return inner
        return Opt(inner)
    if isinstance(e, Plus):
        inner = _simplify_once(e.inner)
        if isinstance(inner, Plus):  # (r+)+ -> r+
            return Plus(inner.inner)
        if isinstance(inner, Opt):  # (r?)+ -> r+?
            return Opt(Plus(inner.inner))
        # (r1 | r2+)+ -> (r1 | r2)+ ; sound only under an enclosing +
        if isinstance(inner, Disj) and any(isinstance(p, Plus) for p in inner.parts):
            stripped = tuple(p.inner if isinstance(p, Plus) else p for p in inner.parts)
            return Plus(disj(stripped))
        return Plus(inner)
    if isinstance(e, Concat):
        return concat(_simplify_once(p) for p in e.parts)
    if isinstance(e, Disj):
        parts = [_simplify_once(p) for p in e.parts]
        # r1 | r2? -> (r1 | r2)?
        if any(isinstance(p, Opt) for p in parts):
            unwrapped = [p.inner if isinstance(p, Opt) else p for p in parts]
            return Opt(disj(unwrapped))
        return disj(parts)
    raise TypeError(f"not a Regex: {e!r}")


def simplify(e: Regex) -> Regex:
    """Apply the syntactic simplification rules to a fixpoint.

    Every rule preserves the accepted language and never increases the
    number of symbol occurrences, so candidates can be simplified freely
    before they are compared.
    """
    while True:
        nxt = _simplify_once(e)
        if nxt == e:
            return e
        e = nxt


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def _normalize_once(e: Regex) -> Regex:
    if _atomic(e):
        return e
    if isinstance(e, Opt):
        inner = _normalize_once(e.inner)
        if isinstance(inner, (Empty, Epsilon)):  # EMPTY? -> EMPTY, EPS? -> EPS
            return inner
        if isinstance(inner, Opt):  # r?? -> r?
            return inner
        return Opt(inner)
    if isinstance(e, Plus):
        inner = _normalize_once(e.inner)
        if isinstance(inner, (Empty, Epsilon)):  # EMPTY+ -> EMPTY, EPS+ -> EPS
            return inner
        if isinstance(inner, Plus):  # r++ -> r+
            return inner
        if isinstance(inner, Opt):  # r?+ -> r+?
            return Opt(Plus(inner.inner))
        return Plus(inner)
    if isinstance(e, Concat):
        parts = []
        for p in e.parts:
            q = _normalize_once(p)
            if isinstance(q, Empty):  # r EMPTY -> EMPTY
                return EMPTY
            if isinstance(q, Epsilon):  # r EPS -> r
                continue
            parts.append(q)
        return concat(parts)
    if isinstance(e, Disj):
        parts = []
        has_eps = False
        for p in e.parts:
            q = _normalize_once(p)
            if isinstance(q, Empty):  # r | EMPTY -> r
                continue
            if isinstance(q, Epsilon):  # r | EPS -> r?
                has_eps = True
                continue
            parts.append(q)
        if not parts:
            return EPSILON if has_eps else EMPTY
        body = disj(parts)
        return _normalize_once(Opt(body)) if has_eps else body
    raise TypeError(f"not a Regex: {e!r}")


def normalize(e: Regex) -> Regex:
    """Rewrite to normal form: no EMPTY or EPS in proper subexpressions and
    no redundant unary nesting.  Language-preserving; for a normalized
    expression with at most k occurrences of each of its s symbols the
    notation length is bounded by 10*k*s.
    """
    while True:
        nxt = _normalize_once(e)
        if nxt == e:
            return e
        e = nxt
