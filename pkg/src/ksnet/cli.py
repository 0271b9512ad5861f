"""Command line front end.

    ksnet fit --d 2 --gamma 6 --depth 30 --in samples.csv --model model.json
    ksnet eval --model model.json --in points.csv --out values.csv
    ksnet check --d 2 --gamma 6 --trials 20
    ksnet bench --sweep-n 50,100,200 --target product --out bench.csv
    ksnet describe --model model.json

Sample CSV: header row, then d coordinate columns and one target column per
row; cells may use decimal or p/q syntax.  Point CSV: the same without the
target column.  Exit codes: 0 success, 2 input or configuration problems,
3 separation failure (the closed-path witness is printed), 4 internal
invariant violations.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import itertools
import json
import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DomainError,
    InputError,
    InternalInvariantError,
    IterationDiverged,
    ModelFormatError,
    ParameterError,
    SeparationFailure,
)
from .hashmaps import (
    DEFAULT_SERIES_TOLERANCE,
    build_incidence,
    check_ranges,
    make_params,
    separation_check,
)
from .inner import default_inner_spec, verify_inner
from .network import FastEvaluator, assemble, describe, evaluate, load, save
from .outer import SampleSet, fit_exact, fit_iterative, merge_report
from .rationals import format_rational, grid_points, parse_rational

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SEPARATION = 3
EXIT_INTERNAL = 4

REPORT_VERSION = 1

def _prod(p):
    acc = Fraction(1)
    for c in p:
        acc *= Fraction(c)
    return acc


TARGETS = {
    "product": _prod,
    "sum": lambda p: sum(Fraction(c) for c in p),
    "indicator": lambda p: Fraction(1) if p[0] < Fraction(1, 2) else Fraction(0),
    "reciprocal": lambda p: 1 / (sum(Fraction(c) for c in p) + Fraction(1, 1000)),
}


@dataclass
class JobConfig:
    """One command's validated knobs; bad combinations never reach the math."""

    command: str
    d: int = 2
    gamma: int = 6
    depth: int | None = 30
    grid_level: int = 1
    mode: str = "exact"
    numeric: str = "exact"
    tolerance: Fraction = Fraction(1, 10**6)
    series_tolerance: Fraction = DEFAULT_SERIES_TOLERANCE
    max_iter: int = 100
    damping: Fraction = Fraction(1, 2)
    seed: int = 0
    in_path: str | None = None
    out_path: str | None = None
    model_path: str | None = None
    timestamps: bool = True
    samples: int = 2000
    trials: int = 20
    trial_points: int = 50
    probe_level: int = 1
    sweep_n: tuple[int, ...] = (50, 100, 200)
    target: str = "product"
    dot: bool = False

    def __post_init__(self):
        if self.d < 2:
            raise InputError(f"--d must be >= 2, got {self.d}")
        if self.gamma < 2 * self.d + 2:
            raise InputError(f"--gamma must be >= 2d+2 = {2 * self.d + 2}, got {self.gamma}")
        if self.depth is not None and self.depth < 1:
            raise InputError(f"--depth must be >= 1, got {self.depth}")
        if self.grid_level < 1:
            raise InputError(f"--grid-level must be >= 1, got {self.grid_level}")
        if self.mode not in ("exact", "iterative"):
            raise InputError(f"--mode must be exact or iterative, got {self.mode!r}")
        if self.numeric not in ("exact", "fast"):
            raise InputError(f"--numeric must be exact or fast, got {self.numeric!r}")
        if self.tolerance <= 0:
            raise InputError(f"--tolerance must be positive, got {self.tolerance}")
        if self.series_tolerance <= 0:
            raise InputError(f"--series-tolerance must be positive, got {self.series_tolerance}")
        if self.max_iter < 1:
            raise InputError(f"--max-iter must be >= 1, got {self.max_iter}")
        if not 0 < self.damping <= 1:
            raise InputError(f"--damping must lie in (0, 1], got {self.damping}")
        if self.seed < 0:
            raise InputError(f"--seed must be >= 0, got {self.seed}")
        if self.samples < 2:
            raise InputError(f"--samples must be >= 2, got {self.samples}")
        if self.trials < 1:
            raise InputError(f"--trials must be >= 1, got {self.trials}")
        if self.trial_points < 2:
            raise InputError(f"--trial-points must be >= 2, got {self.trial_points}")
        if self.probe_level < 1:
            raise InputError(f"--probe-level must be >= 1, got {self.probe_level}")
        if any(n < 1 for n in self.sweep_n):
            raise InputError(f"--sweep-n entries must be >= 1, got {self.sweep_n}")
        if self.target not in TARGETS:
            raise InputError(f"--target must be one of {sorted(TARGETS)}, got {self.target!r}")
        if self.command in ("fit", "eval") and not self.in_path:
            raise InputError(f"{self.command} requires --in")
        if self.command in ("fit", "eval", "describe") and not self.model_path:
            raise InputError(f"{self.command} requires --model")
        if self.command == "fit" and self.depth is None:
            raise InputError("fit requires --depth")

    def to_jsonable(self) -> dict:
        return {
            "command": self.command,
            "d": self.d,
            "gamma": self.gamma,
            "depth": self.depth,
            "grid_level": self.grid_level,
            "mode": self.mode,
            "numeric": self.numeric,
            "tolerance": format_rational(self.tolerance),
            "series_tolerance": format_rational(self.series_tolerance),
            "max_iter": self.max_iter,
            "damping": format_rational(self.damping),
            "seed": self.seed,
            "in": self.in_path,
            "out": self.out_path,
            "model": self.model_path,
        }


def _read_csv_rows(path: str) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file, a header row is required")
    return rows


def _parse_cell(cell: str, row_no: int, col_no: int) -> Fraction:
    try:
        return parse_rational(cell)
    except InputError as exc:
        raise InputError(f"row {row_no}, column {col_no}: {exc}") from None


def _read_samples(path: str, d: int) -> SampleSet:
    rows = _read_csv_rows(path)
    header, data = rows[0], rows[1:]
    if len(header) != d + 1:
        raise InputError(
            f"{path}: expected {d + 1} columns ({d} coordinates and a target), got {len(header)}"
        )
    if not data:
        raise InputError(f"{path}: no sample rows")
    points, targets = [], []
    seen: dict[tuple, int] = {}
    for row_no, row in enumerate(data, start=1):
        if len(row) != d + 1:
            raise InputError(f"row {row_no}: expected {d + 1} cells, got {len(row)}")
        point = tuple(_parse_cell(cell, row_no, c + 1) for c, cell in enumerate(row[:d]))
        target = _parse_cell(row[d], row_no, d + 1)
        for c, coord in enumerate(point, start=1):
            if not 0 <= coord <= 1:
                raise InputError(f"row {row_no}, column {c}: coordinate {coord} leaves [0, 1]")
        if point in seen:
            raise InputError(f"duplicate point: rows {seen[point]} and {row_no} coincide")
        seen[point] = row_no
        points.append(point)
        targets.append(target)
    return SampleSet(points=tuple(points), targets=tuple(targets))


def _read_points(path: str, d: int) -> list[tuple[Fraction, ...]]:
    rows = _read_csv_rows(path)
    header, data = rows[0], rows[1:]
    if len(header) != d:
        raise InputError(f"{path}: expected {d} coordinate columns, got {len(header)}")
    points = []
    for row_no, row in enumerate(data, start=1):
        if len(row) != d:
            raise InputError(f"row {row_no}: expected {d} cells, got {len(row)}")
        points.append(tuple(_parse_cell(cell, row_no, c + 1) for c, cell in enumerate(row)))
    return points


def _emit_text(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: dict, out_path: str | None) -> None:
    _emit_text(json.dumps(report, indent=2) + "\n", out_path)


def cmd_fit(config: JobConfig) -> int:
    samples = _read_samples(config.in_path, config.d)
    inner = default_inner_spec(config.gamma)
    params = make_params(config.d, config.gamma, config.series_tolerance)
    started = time.perf_counter()
    if config.mode == "exact":
        outer_fn, fit_rep = fit_exact(samples, params, inner, depth=config.depth)
    else:
        table = dict(zip(samples.points, samples.targets))
        axis = grid_points(config.grid_level, config.gamma)
        grid = set(itertools.product(axis, repeat=config.d))
        for row_no, point in enumerate(samples.points, start=1):
            if point not in grid:
                raise InputError(
                    f"row {row_no}: {_point_text(point)} is not a "
                    f"level-{config.grid_level} grid point"
                )
        missing = sorted(p for p in grid if p not in table)
        if missing:
            raise InputError(
                f"iterative mode needs a target at every level-{config.grid_level} "
                f"grid point; {len(missing)} missing, first {_point_text(missing[0])}"
            )
        outer_fn, fit_rep = fit_iterative(
            table.__getitem__,
            params,
            inner,
            grid_level=config.grid_level,
            depth=config.depth,
            max_iter=config.max_iter,
            tolerance=config.tolerance,
            damping=config.damping,
        )
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    meta = {
        "fit_mode": config.mode,
        "depth": fit_rep.depth,
        "sample_hash": samples.canonical_hash(),
        "seed": config.seed,
    }
    if config.mode == "iterative":
        meta["grid_level"] = config.grid_level
    if config.timestamps:
        meta["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    model = assemble(inner, params, outer_fn, meta=meta)
    save(model, config.model_path)
    report = {
        "report_version": REPORT_VERSION,
        "command": "fit",
        "config": config.to_jsonable(),
        "fit": fit_rep.to_jsonable(),
        "class": merge_report(outer_fn).to_jsonable(),
        "model_path": config.model_path,
    }
    if config.timestamps:
        report["timing_ms"] = elapsed_ms
    _emit_report(report, config.out_path)
    return EXIT_OK


def _point_text(point) -> str:
    return "(" + ", ".join(format_rational(c) for c in point) + ")"


def cmd_eval(config: JobConfig) -> int:
    model = load(config.model_path)
    points = _read_points(config.in_path, model.params.d)
    fast = FastEvaluator(model) if config.numeric == "fast" else None
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["w", "error_bound"])
    for row_no, point in enumerate(points, start=1):
        try:
            if fast is None:
                w, err = evaluate(model, point, depth=config.depth)
                writer.writerow([format_rational(w), format_rational(err)])
            else:
                w, err = fast.evaluate(point, depth=config.depth)
                writer.writerow([repr(w), repr(err)])
        except DomainError as exc:
            raise InputError(f"row {row_no}: {exc}") from exc
    _emit_text(out.getvalue(), config.out_path)
    return EXIT_OK


def _random_point(rng: random.Random, d: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(rng.getrandbits(50), 2**50) for _ in range(d))


def cmd_check(config: JobConfig) -> int:
    inner = default_inner_spec(config.gamma)
    params = make_params(config.d, config.gamma, config.series_tolerance)
    depth = config.depth if config.depth is not None else 30
    inner_report = verify_inner(inner, samples=config.samples, depth=depth, seed=config.seed)
    range_report = check_ranges(params, inner, probe_level=config.probe_level, depth=depth)
    rng = random.Random(config.seed)
    failed = []
    for trial in range(config.trials):
        points = set()
        while len(points) < config.trial_points:
            points.add(_random_point(rng, config.d))
        system = build_incidence(params, inner, sorted(points), depth)
        verdict = separation_check(system)
        if not verdict.separated:
            failed.append({"trial": trial, "verdict": verdict.to_jsonable()})
    trials_passed = not failed
    report = {
        "report_version": REPORT_VERSION,
        "command": "check",
        "config": config.to_jsonable(),
        "passed": inner_report.passed and range_report.passed and trials_passed,
        "inner": inner_report.to_jsonable(),
        "ranges": range_report.to_jsonable(),
        "separation_trials": {
            "passed": trials_passed,
            "trials": config.trials,
            "points_per_trial": config.trial_points,
            "depth": depth,
            "failures": len(failed),
            "failed_trials": failed,
        },
    }
    _emit_report(report, config.out_path)
    return EXIT_OK


def cmd_bench(config: JobConfig) -> int:
    target = TARGETS[config.target]
    inner = default_inner_spec(config.gamma)
    params = make_params(config.d, config.gamma, config.series_tolerance)
    depth = config.depth if config.depth is not None else 30
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        [
            "n", "d", "gamma", "depth", "mode", "target", "fit_ms", "knot_count",
            "iterations", "convergence_factor", "separation_retries", "final_depth",
            "residual_max",
        ]
    )
    for n in config.sweep_n:
        rng = random.Random(config.seed * 1_000_003 + n)
        points = set()
        while len(points) < n:
            points.add(_random_point(rng, config.d))
        points = sorted(points)
        samples = SampleSet(
            points=tuple(points), targets=tuple(target(p) for p in points)
        )
        started = time.perf_counter()
        _, rep = fit_exact(samples, params, inner, depth=depth)
        ms = (time.perf_counter() - started) * 1000.0
        writer.writerow(
            [
                n, config.d, config.gamma, depth, "exact", config.target,
                f"{ms:.3f}", rep.knot_count, rep.iterations, "",
                rep.separation.retries, rep.depth, format_rational(rep.residual_max),
            ]
        )
    if config.mode == "iterative":
        started = time.perf_counter()
        _, rep = fit_iterative(
            target,
            params,
            inner,
            grid_level=config.grid_level,
            depth=depth,
            max_iter=config.max_iter,
            tolerance=config.tolerance,
            damping=config.damping,
        )
        ms = (time.perf_counter() - started) * 1000.0
        history = rep.convergence_history
        ratios = [b / a for a, b in zip(history, history[1:]) if a > 0]
        factor = f"{sum(ratios) / len(ratios):.6f}" if ratios else ""
        writer.writerow(
            [
                (config.gamma**config.grid_level + 1) ** config.d,
                config.d, config.gamma, depth, "iterative", config.target,
                f"{ms:.3f}", rep.knot_count, rep.iterations, factor,
                rep.separation.retries, rep.depth, format_rational(rep.residual_max),
            ]
        )
    _emit_text(out.getvalue(), config.out_path)
    return EXIT_OK


def cmd_describe(config: JobConfig) -> int:
    model = load(config.model_path)
    report = describe(model)
    if config.dot:
        _emit_text(report.dot() + "\n", config.out_path)
    else:
        _emit_report(report.to_jsonable(), config.out_path)
    return EXIT_OK


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksnet",
        description="Exact superposition networks: fit, evaluate, check, benchmark, describe.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, depth_default=30):
        p.add_argument("--d", type=int, default=2, help="input dimension (>= 2)")
        p.add_argument("--gamma", type=int, default=6, help="digit base (>= 2d+2)")
        p.add_argument("--depth", type=int, default=depth_default, help="truncation depth in digits")
        p.add_argument("--seed", type=int, default=0, help="RNG seed recorded in outputs")
        p.add_argument("--out", dest="out_path", default=None, help="report path (default stdout)")
        p.add_argument("--no-timestamp", dest="timestamps", action="store_false",
                       help="omit timestamps and timings for byte-identical outputs")
        p.add_argument("--series-tolerance", type=parse_rational, default=DEFAULT_SERIES_TOLERANCE,
                       help="tail bound target for the mixing-weight series")

    fit = sub.add_parser("fit", help="fit a model to a sample CSV")
    common(fit)
    fit.add_argument("--in", dest="in_path", required=True, help="sample CSV (d coordinates + target)")
    fit.add_argument("--model", dest="model_path", required=True, help="output model JSON path")
    fit.add_argument("--mode", choices=("exact", "iterative"), default="exact")
    fit.add_argument("--grid-level", dest="grid_level", type=int, default=1,
                     help="grid refinement level for iterative mode")
    fit.add_argument("--tolerance", type=parse_rational, default=Fraction(1, 10**6),
                     help="iterative stopping tolerance")
    fit.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    fit.add_argument("--damping", type=parse_rational, default=Fraction(1, 2))

    ev = sub.add_parser("eval", help="evaluate a model on a point CSV")
    ev.add_argument("--model", dest="model_path", required=True)
    ev.add_argument("--in", dest="in_path", required=True, help="point CSV (d coordinate columns)")
    ev.add_argument("--out", dest="out_path", default=None, help="output CSV (default stdout)")
    ev.add_argument("--depth", type=int, default=None, help="override the model's stored depth")
    ev.add_argument("--numeric", choices=("exact", "fast"), default="exact")

    check = sub.add_parser("check", help="run the property suites")
    common(check)
    check.add_argument("--samples", type=int, default=2000, help="points for the inner-function suite")
    check.add_argument("--trials", type=int, default=20, help="random separation trials")
    check.add_argument("--trial-points", dest="trial_points", type=int, default=50)
    check.add_argument("--probe-level", dest="probe_level", type=int, default=1,
                       help="grid level for the range sweep")

    bench = sub.add_parser("bench", help="timing and size sweeps, CSV output")
    common(bench)
    bench.add_argument("--sweep-n", dest="sweep_n", type=_int_list, default=(50, 100, 200))
    bench.add_argument("--target", choices=sorted(TARGETS), default="product")
    bench.add_argument("--mode", choices=("exact", "iterative"), default="exact",
                       help="iterative adds a grid-fit row with a convergence factor")
    bench.add_argument("--grid-level", dest="grid_level", type=int, default=1)
    bench.add_argument("--tolerance", type=parse_rational, default=Fraction(1, 10**6))
    bench.add_argument("--max-iter", dest="max_iter", type=int, default=100)
    bench.add_argument("--damping", type=parse_rational, default=Fraction(1, 2))

    desc = sub.add_parser("describe", help="topology, constants, and knot counts")
    desc.add_argument("--model", dest="model_path", required=True)
    desc.add_argument("--out", dest="out_path", default=None)
    desc.add_argument("--dot", action="store_true", help="emit a graphviz description instead of JSON")

    return parser


_HANDLERS = {
    "fit": cmd_fit,
    "eval": cmd_eval,
    "check": cmd_check,
    "bench": cmd_bench,
    "describe": cmd_describe,
}


def _config_from_args(args: argparse.Namespace) -> JobConfig:
    fields = {f for f in JobConfig.__dataclass_fields__}
    picked = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    if args.command == "eval":
        picked["depth"] = args.depth  # None means: use the model's stored depth
    return JobConfig(**picked)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return _HANDLERS[args.command](config)
    except SeparationFailure as exc:
        witness = (
            "[" + ", ".join(format_rational(w) for w in exc.witness) + "]"
            if exc.witness
            else "unavailable"
        )
        print(f"separation failure: {exc}\nwitness: {witness}", file=sys.stderr)
        return EXIT_SEPARATION
    except (InputError, DomainError, ParameterError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InternalInvariantError, IterationDiverged) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
