"""Command-line entry point.

Exit codes: 0 success, 2 invalid input (schema or diagram axioms),
3 analysis error.  Reports go to stdout unless ``--out`` is given; a
relative ``--out`` path is resolved against ``$BRATTELI_OUTPUT_DIR`` when set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import report
from .diagram import DiagramError, heights, restrict, stochastic, validate
from .extension import AnalysisError, analyze
from .measure import EXACT, FLOAT, EigenError, MeasureError, check_compatibility
from .sampler import SamplerConfig, SamplerError, compare, sample
from .specfile import EXAMPLES, SpecFileError, build_measure, load, parse, target_diagram

EXIT_OK, EXIT_INVALID, EXIT_ANALYSIS = 0, 2, 3
OUTPUT_DIR_ENV = "BRATTELI_OUTPUT_DIR"


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    return p if p.is_absolute() or not base else Path(base) / p


def _emit(text: str, out: str | None) -> None:
    if out:
        p = _out_path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    problem = load(args.spec)
    depth = args.depth or problem.analysis.depth
    rep = validate(problem.diagram, depth)
    out = rep.to_dict()
    ok = rep.valid
    if ok and problem.selection is not None:
        try:
            restrict(problem.diagram, problem.selection, depth=depth)
        except DiagramError as exc:
            ok = False
            out["valid"] = False
            out["violations"].append({
                "level": getattr(exc, "level", None), "kind": "selection", "index": None,
                "severity": "error", "message": str(exc),
            })
    out = {"provenance": report.provenance("validate", problem.digest), **out}
    _emit(report.dumps(out), args.out)
    for v in out["violations"]:
        if v["severity"] == "error":
            print(f"error: {v['message']}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_heights(args) -> int:
    problem = load(args.spec)
    h = heights(problem.diagram, args.level)
    out = {"provenance": report.provenance("heights", problem.digest), "level": args.level,
           "heights": [str(x) for x in h]}
    _emit(report.dumps(out), args.out)
    return EXIT_OK


def cmd_stochastic(args) -> int:
    problem = load(args.spec)
    q = stochastic(problem.diagram, args.level)
    out = {"provenance": report.provenance("stochastic", problem.digest), "level": args.level,
           "rows": [[report.fraction_str(x) for x in row] for row in q]}
    _emit(report.dumps(out), args.out)
    return EXIT_OK


def _mode(args, problem) -> tuple[str, float | None]:
    mode = args.numeric_mode or problem.analysis.numeric_mode
    tol = args.tolerance if args.tolerance is not None else problem.analysis.tolerance
    if mode == FLOAT and tol is None:
        raise SpecFileError("/analysis/tolerance", "--numeric-mode float requires --tolerance")
    return mode, tol


def cmd_measure(args) -> int:
    problem = load(args.spec)
    depth = args.depth or problem.analysis.depth
    mode, tol = _mode(args, problem)
    mu = build_measure(problem, depth + 1, mode, tol)
    target = target_diagram(problem, depth + 1)
    comp = check_compatibility(mu, target, depth)
    levels = []
    for n in range(1, depth + 1):
        levels.append({
            "level": n,
            "p": [report.value(x) for x in mu.vector(n)],
            "tower": [report.value(x) for x in mu.towers(n)],
        })
    out = {
        "provenance": report.provenance("measure", problem.digest, depth=depth, numeric_mode=mu.mode),
        "backing": mu.backing,
        "compatibility": {
            "clean": comp.clean,
            "max_residual": report.value(comp.max_residual),
            "violations": [v.message for v in comp.violations],
        },
        "levels": levels,
    }
    _emit(report.dumps(out), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    problem = load(args.spec)
    if problem.selection is None:
        raise SpecFileError("/selection", "analyze needs a vertex selection")
    depth = args.depth or problem.analysis.depth
    window = args.window or problem.analysis.window
    mode, tol = _mode(args, problem)
    ext_depth = args.extension_depth or 2 * depth
    mu = build_measure(problem, ext_depth + 1, mode, tol)
    rep = analyze(problem.diagram, problem.selection, mu, depth, window=window, extension_depth=ext_depth,
                  require_positive=args.require_positive)
    if args.format == "csv":
        _emit(report.analysis_csv(rep), args.out)
    else:
        prov = report.provenance("analyze", problem.digest, depth=depth, window=window, numeric_mode=mu.mode,
                                 extension_depth=ext_depth)
        _emit(report.dumps(report.analysis_dict(rep, prov)), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    problem = load(args.spec)
    depth = args.depth or problem.analysis.depth
    mu = build_measure(problem, depth + 1, EXACT)
    target = target_diagram(problem, depth + 1)
    stats = sample(SamplerConfig(target, mu, depth, args.count, args.seed))
    rows = compare(stats, mu, target)
    prov = report.provenance("sample", problem.digest, seed=args.seed, count=args.count, depth=depth)
    _emit(report.dumps(report.sample_dict(stats, rows, prov)), args.out)
    return EXIT_OK


def cmd_example(args) -> int:
    if args.name not in EXAMPLES:
        print(f"unknown example {args.name!r}; choose from {', '.join(EXAMPLES)}", file=sys.stderr)
        return EXIT_INVALID
    raw = EXAMPLES[args.name]
    parse(raw)
    base = Path(args.out) if args.out else Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    base.mkdir(parents=True, exist_ok=True)
    path = base / f"{args.name}.json"
    path.write_text(json.dumps(raw, indent=2) + "\n")
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bratteli", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def spec_cmd(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("spec", help="problem file (JSON)")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.set_defaults(func=func)
        return p

    p = spec_cmd("validate", cmd_validate, "check diagram axioms and the selection")
    p.add_argument("--depth", type=int)
    p = spec_cmd("heights", cmd_heights, "path counts from the root at one level")
    p.add_argument("--level", type=int, required=True)
    p = spec_cmd("stochastic", cmd_stochastic, "stochastic matrix Q_n at one level")
    p.add_argument("--level", type=int, required=True)
    for name, func, help_ in (("measure", cmd_measure, "cylinder values and tower masses"),
                              ("analyze", cmd_analyze, "extension analysis and finiteness verdict")):
        p = spec_cmd(name, func, help_)
        p.add_argument("--depth", type=int)
        p.add_argument("--numeric-mode", choices=[EXACT, FLOAT])
        p.add_argument("--tolerance", type=float)
        if name == "analyze":
            p.add_argument("--format", choices=["json", "csv"], default="json")
            p.add_argument("--window", type=int)
            p.add_argument("--extension-depth", type=int)
            p.add_argument("--require-positive", action="store_true")
    p = spec_cmd("sample", cmd_sample, "Monte Carlo tower frequencies on the (sub)diagram")
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int)
    p = sub.add_parser("example", help="write a bundled problem file")
    p.add_argument("name", choices=sorted(EXAMPLES))
    p.add_argument("--out", help="directory for the file")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecFileError as exc:
        print(f"invalid spec file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AnalysisError, MeasureError, EigenError, SamplerError, DiagramError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
