"""Command-line interface.

Subcommands:

* ``infer``: read a sample file, print the inferred expression, and
  optionally write a JSON report and the result's position automaton.
* ``generate``: write sample files (stochastic, covering, or tuned to a
  coverage level) or a corpus of random target expressions.
* ``evaluate``: run inference over a corpus of target expressions and
  tabulate success rates by alphabet size, language-size decile, and
  occupancy (symbol occurrences per alphabet symbol).
* ``xml-extract``: turn XML documents into one sample per element name,
  each word being the sequence of child-element names; ``--dtd`` also
  infers a content model per element.
* ``translate``: automaton JSON in, expression text out.

Sample file format: UTF-8 text, one word per line, symbols separated by
single spaces, an empty line is the empty word, ``#`` starts a comment
line.  Repeated lines carry multiplicity.

Exit codes: 0 success, 2 input error, 3 internal invariant violation.
``REXINFER_THREADS`` caps restart parallelism; ``REXINFER_NO_NUMBA``
selects the pure-numpy training kernels.  All randomness flows from
``--seed``: outputs are reproducible for a fixed seed, except the wall
time recorded in reports.
"""

from __future__ import annotations

import argparse
import json
import math
import string
import sys
import time
import xml.parsers.expat
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .automaton import Koa, Sample
from .generate import GenConfig, SampleGenConfig, covering_sample, gen_expression, gen_sample, hard_family
from .glushkov import coverage, equivalent, glushkov_automaton
from .infer import _thread_count, idregex, oracle_learn
from .measures import horizon, language_size
from .regex import Concat, Disj, Epsilon, Opt, Plus, Regex, Sym, atoms, parse, render, simplify
from .rewrite import koa_to_kore

__all__ = ["main"]


class InputError(Exception):
    """Bad file, flag, or data supplied by the user."""


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _read_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_out(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_sample(path: str) -> Sample:
    try:
        sample = Sample.from_text(_read_file(path))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if not sample.distinct_words():
        raise InputError(f"{path}: sample file is empty")
    return sample


def _parse_bw_iters(text: str | None) -> int | float | None:
    if text is None:
        return None
    if text in ("converge", "inf"):
        return math.inf
    try:
        value = int(text)
    except ValueError:
        raise InputError(
            f"--bw-iters expects an integer or 'converge', got {text!r}"
        ) from None
    if value < 0:
        raise InputError("--bw-iters must be non-negative")
    return value


def _add_inference_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--kmax", type=int, default=None, help="largest per-symbol occurrence bound to try (default 4; with --oracle, the oracle's k, default 1)")
    cmd.add_argument("--restarts", type=int, default=10, help="training restarts per k (default 10)")
    cmd.add_argument("--bw-iters", default=None, metavar="N|converge", help="retraining steps after each disambiguation deletion (default: 2 for up to 7 symbols, else 3)")
    cmd.add_argument("--bw-epsilon", type=float, default=None, help="relative log-likelihood convergence threshold for training (default 1e-6)")
    cmd.add_argument("--measure", choices=("size", "mdl"), default="size", help="candidate ranking: bounded language size or description length")
    cmd.add_argument("--seed", type=int, default=None, help="root seed; fixes every random choice")


def _target_expression(args) -> Regex:
    if args.expr is not None and args.family is not None:
        raise InputError("--expr and --family are mutually exclusive")
    if args.expr is not None:
        return parse(args.expr)
    if args.family is not None:
        if args.n is None:
            raise InputError("--family needs --n")
        return hard_family(args.n, args.family)
    raise InputError("need --expr or --family to name the target")


# ---------------------------------------------------------------------------
# infer
# ---------------------------------------------------------------------------

def _cmd_infer(args) -> int:
    sample = _load_sample(args.sample)
    started = time.perf_counter()
    if args.oracle:
        k = 1 if args.kmax is None else args.kmax
        expr = oracle_learn(sample, k=k)
        report = {
            "mode": "oracle",
            "alphabet": sorted(sample.alphabet()),
            "words": sample.n_distinct,
            "k": k,
            "seed": args.seed,
            "chosen": render(expr),
        }
    else:
        cand, report = idregex(
            sample,
            kmax=4 if args.kmax is None else args.kmax,
            restarts=args.restarts,
            bw_iters=_parse_bw_iters(args.bw_iters),
            measure=args.measure,
            rng=args.seed,
            bw_epsilon=args.bw_epsilon,
        )
        expr = cand.expr
        report["mode"] = "idregex"
    frac = coverage(expr, sample)
    report["coverage"] = {
        "fraction": f"{frac.numerator}/{frac.denominator}",
        "value": float(frac),
    }
    report["wall_time_s"] = round(time.perf_counter() - started, 3)

    print(report["chosen"])
    if args.json_report:
        _write_out(args.json_report, json.dumps(report, indent=2) + "\n")
    if args.dump_automaton:
        _write_out(args.dump_automaton, glushkov_automaton(expr).to_json(indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _draw_word(r: Regex, rng: np.random.Generator):
    return gen_sample(r, SampleGenConfig(size=1), rng).distinct_words()[0]


def _sample_at_coverage(
    r: Regex, target: float, size: int | None, rng: np.random.Generator
) -> Sample:
    """Grow a sample until its edge coverage sits near ``target``.

    Words that would overshoot the band are skipped while better fits
    remain plausible; multiplicity padding afterwards never moves
    coverage, so ``size`` can be honored exactly.
    """
    if not 0.0 < target <= 1.0:
        raise InputError("--coverage must be in (0, 1]")
    low, high = target - 0.05, target + 0.05
    counts: dict[tuple[str, ...], int] = {}
    current = 0.0
    patience = 200
    while current < low:
        word = _draw_word(r, rng)
        trial = Sample({**counts, word: counts.get(word, 0) + 1})
        value = float(coverage(r, trial))
        if value > high and patience > 0:
            patience -= 1
            continue
        counts[word] = counts.get(word, 0) + 1
        current = value
    if size is not None:
        total = sum(counts.values())
        if total > size:
            raise InputError(
                f"--coverage {target} needed {total} words; raise --size"
            )
        words = sorted(counts)
        for _ in range(size - total):
            pick = words[int(rng.integers(len(words)))]
            counts[pick] += 1
    return Sample(counts)


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.corpus is not None:
        if not 1 <= args.alphabet_size <= 26:
            raise InputError("--alphabet-size must be between 1 and 26")
        if args.k < 1:
            raise InputError("--k must be at least 1")
        alphabet = tuple(string.ascii_lowercase[: args.alphabet_size])
        lines = []
        for _ in range(args.corpus):
            occurrences = tuple(
                int(rng.integers(1, args.k + 1)) for _ in alphabet
            )
            cfg = GenConfig(alphabet=alphabet, per_symbol_occurrences=occurrences)
            lines.append(render(gen_expression(cfg, rng)))
        _write_out(args.out, "\n".join(lines) + "\n")
        return 0

    target = _target_expression(args)
    if args.covering:
        sample = covering_sample(target, rng=rng, size=args.size)
    elif args.coverage is not None:
        sample = _sample_at_coverage(target, args.coverage, args.size, rng)
    else:
        if args.size is None:
            raise InputError("--size is required unless --covering or --coverage is given")
        sample = gen_sample(target, SampleGenConfig(size=args.size), rng)
    _write_out(args.out, sample.to_text())
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _bucket(value: float, start: float, width: float) -> str:
    index = max(0, int(math.floor((value - start) / width)))
    lo = start + index * width
    return f"[{lo:.1f},{lo + width:.1f})"


def _tally(rows, key) -> dict[str, dict[str, int | float]]:
    table: dict[str, list[int]] = {}
    for row in rows:
        slot = table.setdefault(key(row), [0, 0])
        slot[0] += row["success"]
        slot[1] += 1
    return {
        bucket: {"succeeded": got, "total": total, "rate": round(got / total, 3)}
        for bucket, (got, total) in sorted(table.items())
    }


def _cmd_evaluate(args) -> int:
    text = _read_file(args.corpus)
    targets: list[Regex] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        try:
            targets.append(parse(body))
        except ValueError as exc:
            raise InputError(f"{args.corpus}:{lineno}: {exc}") from exc

    master = np.random.default_rng(args.seed)
    jobs = [
        (target, int(master.integers(2**63))) for target in targets
    ]

    def run_one(job):
        target, seed = job
        rng = np.random.default_rng(seed)
        sample = covering_sample(target, rng=rng, size=args.size)
        cand, _ = idregex(
            sample,
            kmax=4 if args.kmax is None else args.kmax,
            restarts=args.restarts,
            bw_iters=_parse_bw_iters(args.bw_iters),
            measure=args.measure,
            rng=seed,
        )
        alphabet = {a.name for a in atoms(target)}
        n = horizon(target)
        universe = sum(len(alphabet) ** i for i in range(n + 1))
        ratio = language_size(target) / universe
        return {
            "target": render(target),
            "result": render(cand.expr),
            "success": equivalent(cand.expr, target),
            "alphabet_size": len(alphabet),
            "occupancy": round(len(atoms(target)) / len(alphabet), 3),
            "size_ratio": round(ratio, 4),
        }

    workers = _thread_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, jobs))
    else:
        rows = [run_one(job) for job in jobs]

    summary = {
        "targets": len(rows),
        "succeeded": sum(r["success"] for r in rows),
        "by_alphabet": _tally(rows, lambda r: str(r["alphabet_size"])),
        "by_size_decile": _tally(rows, lambda r: _bucket(min(r["size_ratio"], 0.999), 0.0, 0.1)),
        "by_occupancy": _tally(rows, lambda r: _bucket(r["occupancy"], 1.0, 0.2)),
        "rows": rows,
    }

    if rows:
        print(f"{summary['succeeded']}/{summary['targets']} targets recovered")
        for title, table in (
            ("alphabet size", summary["by_alphabet"]),
            ("language-size decile", summary["by_size_decile"]),
            ("occurrences per symbol", summary["by_occupancy"]),
        ):
            print(f"by {title}:")
            for bucket, cell in table.items():
                print(f"  {bucket:>10}  {cell['succeeded']}/{cell['total']}  ({cell['rate']:.0%})")
    else:
        print("0/0 targets recovered")
    if args.json_report:
        _write_out(args.json_report, json.dumps(summary, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# xml-extract
# ---------------------------------------------------------------------------

def _scan_xml(paths) -> tuple[dict[str, list[tuple[str, ...]]], list[str]]:
    """Child-element-name sequences per element name, across documents.

    Streaming and well-formedness-checking only: no DTD validation, no
    namespace expansion (prefixes stay part of the name).  Returns the
    bags plus mixed-content warnings.
    """
    bags: dict[str, list[tuple[str, ...]]] = {}
    warnings: list[str] = []

    for path in paths:
        parser = xml.parsers.expat.ParserCreate()
        stack: list[list] = []  # [name, children, saw_text]
        mixed: set[str] = set()

        def start(name: str, attrs, _stack=stack) -> None:
            if _stack:
                _stack[-1][1].append(name)
            _stack.append([name, [], False])

        def end(name: str, _stack=stack, _mixed=mixed) -> None:
            name_, children, saw_text = _stack.pop()
            bags.setdefault(name_, []).append(tuple(children))
            if saw_text and children:
                _mixed.add(name_)

        def chars(data: str, _stack=stack) -> None:
            if _stack and data.strip():
                _stack[-1][2] = True

        parser.StartElementHandler = start
        parser.EndElementHandler = end
        parser.CharacterDataHandler = chars
        try:
            with open(path, "rb") as handle:
                parser.ParseFile(handle)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
        except xml.parsers.expat.ExpatError as exc:
            raise InputError(f"{path}: malformed XML: {exc}") from exc
        for name in sorted(mixed):
            warnings.append(f"{path}: element '{name}' has mixed content; text ignored")
    return bags, warnings


def _dtd_content(e: Regex) -> str:
    if isinstance(e, Epsilon):
        return "EMPTY"

    def rec(x: Regex) -> str:
        if isinstance(x, Sym):
            return x.name
        if isinstance(x, Concat):
            return "(" + ", ".join(rec(p) for p in x.parts) + ")"
        if isinstance(x, Disj):
            return "(" + " | ".join(rec(p) for p in x.parts) + ")"
        if isinstance(x, Opt):
            return rec(x.inner) + "?"
        if isinstance(x, Plus):
            return rec(x.inner) + "+"
        raise InputError(f"cannot express {render(x)} as DTD content")

    body = rec(e)
    return body if body.startswith("(") else f"({body})"


def _cmd_xml_extract(args) -> int:
    bags, warnings = _scan_xml(args.paths)
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    if args.element is not None:
        if args.element not in bags:
            raise InputError(f"no element named '{args.element}' in the input")
        selected = {args.element: bags[args.element]}
    else:
        selected = bags

    for name in sorted(selected):
        sample = Sample(selected[name])
        if args.out:
            directory = Path(args.out)
            directory.mkdir(parents=True, exist_ok=True)
            (directory / f"{name}.sample").write_text(sample.to_text(), encoding="utf-8")
        elif len(selected) == 1:
            sys.stdout.write(sample.to_text())
        else:
            print(f"# element: {name}")
            sys.stdout.write(sample.to_text())
        if args.dtd:
            cand, _ = idregex(
                sample,
                kmax=2 if args.kmax is None else args.kmax,
                restarts=args.restarts,
                bw_iters=_parse_bw_iters(args.bw_iters),
                measure=args.measure,
                rng=args.seed,
            )
            print(f"<!ELEMENT {name} {_dtd_content(simplify(cand.expr))}>")
    return 0


# ---------------------------------------------------------------------------
# translate
# ---------------------------------------------------------------------------

def _cmd_translate(args) -> int:
    text = _read_file(args.automaton)
    try:
        graph = Koa.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{args.automaton}: not a valid automaton: {exc}") from exc
    print(render(simplify(koa_to_kore(graph))))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rexinfer",
        description="Infer concise deterministic regular expressions from example words.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    infer = sub.add_parser("infer", help="infer an expression from a sample file")
    infer.add_argument("sample", help="sample file (one word per line)")
    _add_inference_flags(infer)
    infer.add_argument("--oracle", action="store_true", help="exhaustive enumerative learner (tiny alphabets only)")
    infer.add_argument("--json-report", metavar="PATH", help="write the full report as JSON")
    infer.add_argument("--dump-automaton", metavar="PATH", help="write the result's position automaton as JSON")
    infer.set_defaults(func=_cmd_infer)

    gen = sub.add_parser("generate", help="generate samples or expression corpora")
    gen.add_argument("--expr", help="target expression, e.g. 'a a? b+'")
    gen.add_argument("--family", choices=("r1", "r2"), help="hard target family")
    gen.add_argument("--n", type=int, help="family size parameter")
    gen.add_argument("--size", type=int, help="number of words to emit")
    gen.add_argument("--covering", action="store_true", help="cover every edge of the target's automaton")
    gen.add_argument("--coverage", type=float, metavar="F", help="aim for edge coverage F (within 0.05 where granularity allows)")
    gen.add_argument("--corpus", type=int, metavar="N", help="emit N random target expressions instead of a sample")
    gen.add_argument("--alphabet-size", type=int, default=5, help="corpus alphabet size (default 5)")
    gen.add_argument("--k", type=int, default=1, help="corpus per-symbol occurrence bound (default 1)")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    gen.set_defaults(func=_cmd_generate)

    ev = sub.add_parser("evaluate", help="success rates over an expression corpus")
    ev.add_argument("corpus", help="file with one target expression per line")
    ev.add_argument("--size", type=int, default=300, help="words per generated sample (default 300)")
    _add_inference_flags(ev)
    ev.add_argument("--json-report", metavar="PATH")
    ev.set_defaults(func=_cmd_evaluate)

    xml_cmd = sub.add_parser("xml-extract", help="samples of child-element sequences from XML")
    xml_cmd.add_argument("paths", nargs="+", help="XML documents")
    xml_cmd.add_argument("--element", help="extract only this element name")
    xml_cmd.add_argument("--out", metavar="DIR", help="write one .sample file per element here")
    xml_cmd.add_argument("--dtd", action="store_true", help="also infer and print a <!ELEMENT> line per element")
    _add_inference_flags(xml_cmd)
    xml_cmd.set_defaults(func=_cmd_xml_extract)

    tr = sub.add_parser("translate", help="automaton JSON to expression text")
    tr.add_argument("automaton", help="automaton JSON file")
    tr.set_defaults(func=_cmd_translate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
