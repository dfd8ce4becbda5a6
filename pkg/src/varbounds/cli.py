"""Command-line entry point: ``varbounds <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid input or flags, 3 invariant violated.
CSV output always has a header; notes and verdicts follow as ``#`` lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import bounds, lln, processes, table1, tails, verify
from .errors import InvalidInput, InvariantViolation
from .model import load_instance

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INVARIANT = 3

LLN_CONDITIONS = {
    "25": "Markov25",
    "28": "Markov28",
    "30": "PowerMean30",
    "32": "Theorem9",
    "36": "Theorem12",
}

_INT_RE = re.compile(r"[+-]?\d+")


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() owns the exit code
    def error(self, message):
        raise _ArgumentError(message)


# -- formatting --------------------------------------------------------------


def format_value(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, (float, Fraction)) or hasattr(x, "__float__"):
        return format(float(x), ".12g")
    return str(x)


def parse_value(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    if _INT_RE.fullmatch(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def render_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]], notes: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(x) for x in row])
    for note in notes:
        buf.write(f"# {note}\n")
    return buf.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[Any]], list[str]]:
    """Parse CLI CSV output into (header, typed rows, comment lines)."""
    comments = [line[1:].strip() for line in text.splitlines() if line.startswith("#")]
    body = [line for line in text.splitlines() if line and not line.startswith("#")]
    reader = csv.reader(body)
    header = next(reader, [])
    rows = [[parse_value(cell) for cell in row] for row in reader]
    return header, rows, comments


def render_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, Fraction) or hasattr(x, "__float__"):
        return float(x)
    if hasattr(x, "value"):
        return x.value
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _emit(args, columns, rows, notes=(), doc=None) -> None:
    if args.format == "json":
        if doc is None:
            doc = {"rows": [dict(zip(columns, row)) for row in rows], "notes": list(notes)}
        text = render_json(doc)
    else:
        text = render_csv(columns, rows, notes)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- validation --------------------------------------------------------------


def _positive_int(name: str, value: int | None, minimum: int = 1) -> int:
    if value is None or value < minimum:
        raise InvalidInput(f"--{name} must be an integer >= {minimum}")
    return value


def _positive_real(name: str, value: float | None) -> float:
    if value is None or not math.isfinite(value) or value <= 0:
        raise InvalidInput(f"--{name} must be a finite number > 0")
    return value


def _process_from(args) -> processes.ProcessModel:
    if args.process is None:
        raise InvalidInput("--process is required")
    return processes.make_process(args.process, mu=args.mu, sigma=args.sigma, lam=args.lam, p=args.p)


# -- subcommands -------------------------------------------------------------


def cmd_bounds(args) -> int:
    weights, model = load_instance(args.instance)
    report = bounds.bound_report(weights, model)
    rows = [("exact", True, report.exact, None)]
    rows += [(tag, e.applicable, e.value, e.slack) for tag, e in report.bounds.items()]
    notes = [f"weight_class {report.weight_class.value}"]
    if report.hypothetical:
        notes.append("hypothetical: correlation matrix is not PSD; dominance not asserted")
    for tag, e in report.bounds.items():
        if e.chain is not None:
            notes.append(f"{tag} " + " <= ".join(format_value(x) for x in e.chain))
    bad = report.violations()
    if bad:
        notes.append("violated " + " ".join(bad))
    _emit(args, ["tag", "applicable", "value", "slack"], rows, notes, report.to_dict() if args.format == "json" else None)
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_tails(args) -> int:
    if args.instance is None and not args.empirical:
        raise InvalidInput("--instance is required unless --empirical is given")
    deltas = [_positive_real("delta", d) for d in args.delta]
    notes = []
    rows = []
    if args.empirical:
        proc = _process_from(args)
        n = _positive_int("n", args.n)
        reps = _positive_int("reps", args.reps, processes.MIN_REPS)
        ests = tails.empirical_tail_curve(proc, n, deltas, reps, args.seed, args.workers)
        notes.append(f"bound: correlated mean bound for {proc.name} at n={n}; reps={reps} seed={args.seed}")
        for d, est in zip(deltas, ests):
            b = tails.process_tail_bound(proc, n, d)
            rows.append((d, b, est.estimate, est.std_error, b > 1.0))
        if args.instance is not None:
            weights, model = load_instance(args.instance)
            for d in deltas:
                notes.append(
                    f"instance weighted bound at delta={format_value(d)}: "
                    f"{format_value(tails.tail_bound_weighted(weights, model.profile, d))}"
                )
    else:
        weights, model = load_instance(args.instance)
        notes.append("bound: weighted sum bound (sum|a|)(sum|a| v)/delta^2")
        for d in deltas:
            b = tails.tail_bound_weighted(weights, model.profile, d)
            rows.append((d, b, None, None, b > 1.0))
    _emit(args, ["delta", "bound", "frequency", "std_error", "vacuous"], rows, notes)
    return EXIT_OK


def cmd_lln(args) -> int:
    proc = _process_from(args)
    n_max = _positive_int("n-max", args.n_max, 2)
    condition = LLN_CONDITIONS[args.condition]
    if args.threshold is not None:
        _positive_real("threshold", args.threshold)
    diag = lln.lln_diagnostic(
        proc,
        condition,
        range(1, n_max + 1),
        s=args.s,
        cap=args.cap,
        threshold=args.threshold if args.threshold is not None else lln.DEFAULT_THRESHOLD,
    )
    bnds = diag.bounds or (None,) * len(diag.ns)
    rows = [(n, v, b) for n, v, b in zip(diag.ns, diag.values, bnds)]
    notes = [f"condition {condition} " + " ".join(f"{k}={format_value(v)}" for k, v in sorted(diag.parameters.items()))]
    for key in ("vanishing_variance", "bounded_growth", "var_branch", "cov_branch"):
        if key in diag.details:
            notes.append(f"{key} {format_value(diag.details[key])}")
    notes.append(f"verdict {diag.verdict.value}")
    doc = None
    if args.format == "json":
        doc = {
            "condition": condition,
            "parameters": diag.parameters,
            "rows": [{"n": n, "value": v, "bound": b} for n, v, b in rows],
            "details": {k: v for k, v in diag.details.items() if not isinstance(v, tuple)},
            "verdict": diag.verdict.value,
        }
    _emit(args, ["n", "value", "bound"], rows, notes, doc)
    return EXIT_OK


def _closed_form(proc, statistic: str, n: int, i, j, delta) -> float | None:
    if statistic == "mean_n":
        return processes.expected_mean(proc, n)
    if statistic == "var_of_mean_n":
        return processes.var_of_mean(proc, n)
    if statistic == "cov":
        return processes.kernel_cov(proc, i, j)
    return None  # tail frequency has no closed form, only a bound


def cmd_simulate(args) -> int:
    proc = _process_from(args)
    n = _positive_int("n", args.n)
    reps = _positive_int("reps", args.reps, processes.MIN_REPS)
    est = processes.mc_estimate(
        proc, args.statistic, n, reps, args.seed, i=args.i, j=args.j, delta=args.delta, workers=args.workers
    )
    closed = _closed_form(proc, args.statistic, n, args.i, args.j, args.delta)
    err = None if closed is None else abs(est.estimate - closed)
    notes = [f"process {proc.name} n={n} reps={reps} seed={args.seed}"]
    if args.statistic == "tail":
        notes.append(f"chebyshev bound {format_value(tails.process_tail_bound(proc, n, args.delta))}")
    _emit(
        args,
        ["statistic", "estimate", "std_error", "closed_form", "abs_error"],
        [(args.statistic, est.estimate, est.std_error, closed, err)],
        notes,
    )
    return EXIT_OK


def cmd_table1(args) -> int:
    n = _positive_int("n", args.n, 2)
    steps = _positive_int("variance-steps", args.variance_steps)
    row = table1.run_table1(
        n, args.arithmetic, include_ghosts=args.include_ghosts, variance_steps=steps, workers=args.workers
    )
    notes = list(row.notes)
    if args.arithmetic == "float" and not args.include_ghosts:
        exact = table1.run_table1(n, "exact", variance_steps=steps, workers=args.workers)
        notes.append(f"exact rational arithmetic: {exact.violation_cases} violations")
    ref = table1.REFERENCE_ROWS.get(n) if steps == table1.VARIANCE_STEPS else None
    if ref is not None:
        notes.append(f"reference row {n},{ref[0]},{ref[1]},{ref[2]}")
    doc = {**row.to_dict(), "ratio_text": row.ratio_text, "notes": notes} if args.format == "json" else None
    _emit(args, ["n", "total", "violations", "ratio_percent"], [(n, row.total_cases, row.violation_cases, row.ratio_text)], notes, doc)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_all(include_invariants=True)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [(r.key, r.title, r.passed, r.detail) for r in results]
    failed = [r.key for r in results if not r.passed]
    notes = [f"{len(results) - len(failed)}/{len(results)} checks passed"]
    _emit(args, ["check", "title", "passed", "detail"], rows, notes)
    return EXIT_INVARIANT if failed else EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="write to this file instead of standard output")
    common.add_argument("--workers", type=int, default=1, help="cap on worker threads")

    proc = _Parser(add_help=False)
    proc.add_argument("--process", choices=processes.PROCESS_NAMES)
    proc.add_argument("--mu", type=float, default=0.0)
    proc.add_argument("--sigma", type=float, default=1.0)
    proc.add_argument("--lambda", dest="lam", type=float, default=1.0)
    proc.add_argument("--p", type=float, default=0.5)

    parser = _Parser(prog="varbounds", description="Variance bounds, tail bounds and weak-law diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="exact variance and upper bounds for an instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("tails", parents=[common, proc], help="Chebyshev tail bounds, optionally vs simulation")
    p.add_argument("--instance")
    p.add_argument("--delta", type=float, nargs="+", required=True)
    p.add_argument("--empirical", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("lln", parents=[common, proc], help="weak-law sufficient condition along n = 1..n-max")
    p.add_argument("--condition", choices=tuple(LLN_CONDITIONS), required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--s", type=float)
    p.add_argument("--cap", type=float, help="variance cap C")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_lln)

    p = sub.add_parser("simulate", parents=[common, proc], help="seeded Monte Carlo estimate vs closed form")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--statistic", choices=processes.STATISTICS, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table1", parents=[common], help="grid enumeration of the simplex-weight comparison")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--arithmetic", choices=("float", "exact"), default="float")
    p.add_argument("--include-ghosts", action="store_true")
    p.add_argument("--variance-steps", type=int, default=table1.VARIANCE_STEPS)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance and invariant checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.workers < 1:
            raise InvalidInput("--workers must be >= 1")
        return args.func(args)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InvalidInput, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
