"""Command-line front end.

Every randomized command prints its effective seed to stderr. Rerunning
with ``--seed`` set to that value reproduces the output byte for byte.
Exit codes are 0 on success, 2 for bad input and 3 when the coverage oracle
fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import random
import secrets
import statistics
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .config_space import DEFAULT_ENUMERATION_CAP, SpaceError
from .evaluation import (
    MinCoverError,
    convergence_trajectory,
    exhaustive_infer,
    f_score,
    histogram,
    min_cover,
)
from .formula import FormulaSyntaxError
from .inference import InferenceParams, InferenceResult, run
from .interaction import DEFAULT_IMPLICATION_CAP, InteractionError, NotATemplate, make_conj
from .oracle import (
    CoverageCache,
    OracleError,
    RunnerSpec,
    SubjectError,
    SyntheticOracle,
    default_cache_path,
    fig1_subject,
    load_subject,
    make_oracle,
)

EXIT_OK, EXIT_INPUT, EXIT_ORACLE = 0, 2, 3

log = logging.getLogger("cfginfer")


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


# ---------------------------------------------------------------------------
# helpers


def _seed(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else secrets.randbelow(2**31)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _load_subject(path: str):
    try:
        return load_subject(path)
    except OSError as exc:
        raise InputError(f"cannot read subject {path}: {exc.strerror or exc}") from None


def _oracle(spec, args: argparse.Namespace):
    if isinstance(spec, RunnerSpec):
        cache = CoverageCache(default_cache_path(spec), fresh=args.fresh)
        return make_oracle(spec, cache, verify=args.verify)
    return make_oracle(spec)


def _load_result(path: str) -> InferenceResult:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read result {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return InferenceResult.from_document(doc)
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{path}: not a result document (missing or malformed field {exc})") from None
    except (SpaceError, FormulaSyntaxError, NotATemplate, InteractionError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _result_text(result: InferenceResult, name: str) -> str:
    lines = [
        f"subject: {name}",
        f"seed: {result.seed if result.seed is not None else '-'}",
        f"configs used: {result.configs_used} of {result.space.size}",
        f"iterations: {result.iterations}",
    ]
    lines += [f"warning: {w}" for w in result.warnings]
    lines.append("")
    width = max([0] + [len(loc) for loc in result.locations])
    lines += [f"{loc:<{width}}  {result.per_location[loc].render()}" for loc in result.locations]
    return "\n".join(lines) + "\n"


def _result_csv(result: InferenceResult) -> str:
    rows = [("location", "interaction")]
    rows += [(loc, result.per_location[loc].render(ascii=True)) for loc in result.locations]
    return _csv(rows)


def _format_result(result: InferenceResult, name: str, fmt: str, history: bool) -> str:
    if fmt == "json":
        doc = {"subject": name}
        doc.update(result.to_document(include_history=history))
        return _dump(doc)
    if fmt == "csv":
        return _result_csv(result)
    return _result_text(result, name)


def _siqr(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    q1, _, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return (q3 - q1) / 2


def _summary(runs: list[dict[str, Any]]) -> dict[str, dict[str, float]]:
    columns = {
        "configs_used": [r["configs_used"] for r in runs],
        "iterations": [r["iterations"] for r in runs],
    }
    for kind in ("conj", "disj", "mix", "total"):
        columns[kind] = [r["counts"][kind] for r in runs]
    return {key: {"median": statistics.median(v), "siqr": _siqr(v)} for key, v in columns.items()}


def _params(args: argparse.Namespace, seed: int) -> InferenceParams:
    return InferenceParams(
        seed=seed,
        max_iterations=args.max_iterations,
        implication_cap=args.cap,
        include_default=not args.no_default,
        jobs=args.jobs,
        patience=args.patience,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_infer(args: argparse.Namespace) -> int:
    spec = _load_subject(args.subject)
    seed = _seed(args)
    oracle = _oracle(spec, args)
    name = spec.name
    if args.repeats == 1:
        result = run(oracle, spec.space, _params(args, seed))
        if args.trajectory:
            exact = _load_result(args.trajectory)
            rows = [("iteration", "normalized_x", "f_score")]
            rows += [(i, f"{x:.6f}", f"{f:.6f}") for i, x, f in convergence_trajectory(result, exact.per_location)]
            _emit(_csv(rows), args.output)
        else:
            _emit(_format_result(result, name, args.format, not args.no_history), args.output)
        return EXIT_OK

    runs = []
    for k in range(args.repeats):
        result = run(oracle, spec.space, _params(args, seed + k))
        runs.append(
            {
                "seed": seed + k,
                "configs_used": result.configs_used,
                "iterations": result.iterations,
                "counts": result.counts(),
                "interactions": {loc: result.per_location[loc].render(ascii=True) for loc in result.locations},
            }
        )
    summary = _summary(runs)
    if args.format == "json":
        text = _dump({"subject": name, "seed": seed, "repeats": args.repeats, "space_size": spec.space.size, "summary": summary, "runs": runs})
    elif args.format == "csv":
        rows = [("seed", "configs_used", "iterations", "conj", "disj", "mix", "total")]
        rows += [(r["seed"], r["configs_used"], r["iterations"], *(r["counts"][k] for k in ("conj", "disj", "mix", "total"))) for r in runs]
        text = _csv(rows)
    else:
        lines = [f"subject: {name}", f"seeds: {seed}..{seed + args.repeats - 1} ({args.repeats} runs)", f"space size: {spec.space.size}", ""]
        lines.append(f"{'metric':<14}{'median':>10}{'siqr':>10}")
        for key, stats in summary.items():
            lines.append(f"{key:<14}{stats['median']:>10g}{stats['siqr']:>10g}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_exhaustive(args: argparse.Namespace) -> int:
    spec = _load_subject(args.subject)
    result = exhaustive_infer(_oracle(spec, args), spec.space, cap=args.cap, jobs=args.jobs)
    _emit(_format_result(result, spec.name, args.format, not args.no_history), args.output)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    inferred, exact = _load_result(args.inferred), _load_result(args.exact)
    if inferred.space != exact.space:
        raise InputError("the two results are over different configuration spaces")
    report = f_score(inferred, exact)
    if args.format == "json":
        text = _dump(report.to_document())
    elif args.format == "csv":
        text = _csv([("location", "f_score")] + [(loc, f"{f:.6f}") for loc, f in sorted(report.per_location_f.items())])
    else:
        text = report.to_text()
    _emit(text, args.output)
    return EXIT_OK


def cmd_mincover(args: argparse.Namespace) -> int:
    result = _load_result(args.result)
    seed = _seed(args)
    cover = min_cover(result, result.space, random.Random(seed), cap=args.cap, draws=args.draws)
    if args.format == "json":
        doc = {"seed": seed}
        doc.update(cover.to_document())
        text = _dump(doc)
    elif args.format == "csv":
        names = result.space.names
        text = _csv([names] + [tuple(c[n] for n in names) for c in cover.configs])
    else:
        lines = [f"{len(cover.configs)} configuration(s) cover {len(cover.covered)} of {len(result.per_location)} locations"]
        lines += [f"  {c.canonical()}" for c in cover.configs]
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_histogram(args: argparse.Namespace) -> int:
    result = _load_result(args.result)
    rows = histogram(result)
    if args.format == "json":
        text = _dump([{"length": n, "interactions": i, "locations": loc} for n, i, loc in rows])
    elif args.format == "csv":
        text = _csv([("length", "interactions", "locations")] + rows)
    else:
        lines = [f"{'length':>6}  {'interactions':>12}  {'locations':>9}"]
        lines += [f"{n:>6}  {i:>12}  {loc:>9}" for n, i, loc in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def demo_text(seed: int) -> str:
    """The bundled seven-option example, end to end, as a narrative."""
    spec = fig1_subject()
    space = spec.space
    out: list[str] = []
    say = out.append

    say(f"Subject: {len(space.names)} options ({', '.join(space.names)}), {space.size} configurations, "
        f"{len(spec.locations)} locations.")
    result = run(SyntheticOracle(spec), space, InferenceParams(seed=seed))
    first = result.history[0]
    say("")
    say(f"Iteration 1 starts from a random 1-way covering array of {len(first.new_configs)} configurations:")
    for i, c in enumerate(first.new_configs, 1):
        say(f"  c{i}: {c.canonical()}  covers {', '.join(result.coverage.locations_of(c))}")
    say("")
    say("Candidates after iteration 1 (conj | disj | conjdisj | disjconj):")
    for loc, t in sorted(first.candidates.items()):
        say(f"  {loc}: " + " | ".join(c.render() for c in t.components))
    if len(result.history) > 1 and first.refined is not None:
        batch = result.history[1].new_configs
        say("")
        say(f"The longest candidate core is {make_conj(first.refined).render()}; mutating one setting at a time gives "
            f"{len(batch)} new configuration(s):")
        for c in batch:
            say(f"  {c.canonical()}")
    say("")
    say(f"Fix-point after {result.iterations} iterations using {result.configs_used} of {space.size} configurations.")
    say("Final interactions:")
    for loc in result.locations:
        say(f"  {loc}: {result.per_location[loc].render()}")

    exact = exhaustive_infer(SyntheticOracle(spec), space)
    report = f_score(result, exact)
    say("")
    say(f"Against an exhaustive run over all {space.size} configurations: "
        f"f={report.f_score:.1f}, delta_cov={report.delta_cov:+d}")
    cover = min_cover(result, space, random.Random(seed))
    say(f"Minimal covering configurations ({len(cover.configs)}):")
    for c in cover.configs:
        say(f"  {c.canonical()}")
    return "\n".join(out) + "\n"


def cmd_demo(args: argparse.Namespace) -> int:
    _emit(demo_text(_seed(args)), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfginfer", description="Infer configuration interactions from coverage.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, formats=("json", "text", "csv"), default="text") -> None:
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("-o", "--output", help="write to this file instead of stdout")

    def seeded(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, help="random seed (generated and printed when omitted)")

    def oracle_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--jobs", type=_positive, default=1, help="concurrent oracle evaluations")
        p.add_argument("--fresh", action="store_true", help="discard the coverage cache of a runner subject")
        p.add_argument("--verify", action="store_true", help="run every configuration twice and compare")
        p.add_argument("--no-history", action="store_true", help="omit per-iteration history from JSON")

    p = sub.add_parser("infer", help="run iterative inference on a subject or runner file")
    p.add_argument("subject")
    seeded(p)
    common(p)
    oracle_flags(p)
    p.add_argument("--cap", type=_positive, default=DEFAULT_IMPLICATION_CAP, help="implication enumeration cap")
    p.add_argument("--max-iterations", type=_positive, default=100)
    p.add_argument("--patience", type=_positive, default=InferenceParams.patience)
    p.add_argument("--no-default", action="store_true", help="do not seed with the default configuration")
    p.add_argument("--repeats", type=_positive, default=1, help="runs with seeds seed..seed+N-1; reports medians")
    p.add_argument("--trajectory", metavar="EXACT", help="emit the f-score trajectory against this result as CSV")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("exhaustive", help="one inference pass over every configuration")
    p.add_argument("subject")
    common(p)
    oracle_flags(p)
    p.add_argument("--cap", type=_positive, default=DEFAULT_ENUMERATION_CAP, help="largest space to enumerate")
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("compare", help="f-score and delta coverage of two result documents")
    p.add_argument("inferred")
    p.add_argument("exact")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mincover", help="small configuration set covering a result's interactions")
    p.add_argument("result")
    seeded(p)
    common(p)
    p.add_argument("--draws", type=_positive, default=10, help="keep the smallest of this many greedy draws")
    p.add_argument("--cap", type=_positive, default=DEFAULT_IMPLICATION_CAP)
    p.set_defaults(func=cmd_mincover)

    p = sub.add_parser("histogram", help="interaction length against number of interactions and locations")
    p.add_argument("result")
    common(p)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("demo", help="walk through the bundled seven-option example")
    seeded(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if getattr(args, "trajectory", None) and getattr(args, "repeats", 1) > 1:
        print("error: --trajectory needs a single run", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except OracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (InputError, SubjectError, SpaceError, FormulaSyntaxError, NotATemplate, InteractionError, MinCoverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
