"""Outer functions on knots, and the two ways to fit them.

A fitted network stores one knot table per branch: the branch values of the
sample points paired with outer-function values.  Between knots the outer
function interpolates linearly inside a branch; beyond a branch's knots it
clamps to the nearest knot of that branch, so its range never leaves the
span of the stored values (bounded targets stay bounded, and edits to one
branch cannot leak into another branch's interval).

fit_exact solves the underdetermined interpolation system exactly, picking
the minimum-Euclidean-norm solution g = M^T (M M^T)^-1 f so the result is
deterministic.  fit_iterative walks the classic damped residual iteration on
a uniform grid and then (by default) hands the knots to the exact solver, so
the constructive route ends at the same zero-residual guarantee.
"""

from __future__ import annotations

import hashlib
import itertools
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DomainError,
    InputError,
    InternalInvariantError,
    IterationDiverged,
    ParameterError,
    SeparationFailure,
)
from .hashmaps import HashParams, IncidenceSystem, certify_separation
from .inner import InnerSpec
from .linsolve import solve_square
from .rationals import ZERO, format_rational, grid_points

CLASS_TAGS = ("continuous", "bounded-discontinuous", "unbounded")


@dataclass(frozen=True)
class KnotTable:
    """Sorted exact knots of one branch with their outer-function values."""

    ys: tuple[Fraction, ...]
    gs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.ys) != len(self.gs):
            raise ParameterError(f"{len(self.ys)} knots but {len(self.gs)} values")
        for a, b in zip(self.ys, self.ys[1:]):
            if a >= b:
                raise ParameterError(f"knots must be strictly increasing, got {a} then {b}")


@dataclass(frozen=True)
class OuterFunction:
    """Per-branch knot tables over the disjoint intervals [b_q, b_q + 2d]."""

    d: int
    b: tuple[int, ...]
    tables: tuple[KnotTable, ...]

    def __post_init__(self):
        width = 2 * self.d
        expected_b = tuple((width + 1) * q for q in range(width + 1))
        if tuple(self.b) != expected_b:
            raise ParameterError(f"b must be (2d+1)q for q = 0..2d, got {self.b}")
        if len(self.tables) != width + 1:
            raise ParameterError(
                f"need {width + 1} branch tables for d = {self.d}, got {len(self.tables)}"
            )
        for q, table in enumerate(self.tables):
            if table.ys and (table.ys[0] < self.b[q] or table.ys[-1] > self.b[q] + width):
                raise ParameterError(
                    f"branch {q} knots must lie in [{self.b[q]}, {self.b[q] + width}]"
                )

    @property
    def knot_count(self) -> int:
        return sum(len(t.ys) for t in self.tables)


def _interp(table: KnotTable, y: Fraction) -> Fraction:
    ys, gs = table.ys, table.gs
    if y <= ys[0]:
        return gs[0]
    if y >= ys[-1]:
        return gs[-1]
    i = bisect_left(ys, y)
    if ys[i] == y:
        return gs[i]
    y0, y1 = ys[i - 1], ys[i]
    return gs[i - 1] + (gs[i] - gs[i - 1]) * (y - y0) / (y1 - y0)


def _nearest_knot_value(outer: OuterFunction, y: Fraction) -> Fraction:
    best = None
    for table in outer.tables:
        if not table.ys:
            continue
        i = bisect_left(table.ys, y)
        for j in (i - 1, i):
            if 0 <= j < len(table.ys):
                key = (abs(table.ys[j] - y), table.ys[j])
                if best is None or key < best[0]:
                    best = (key, table.gs[j])
    return best[1]


def g_eval(outer: OuterFunction, y) -> Fraction:
    """The outer function on the whole real line, exact for rational y.

    Inside a branch interval: linear interpolation between that branch's
    knots, clamped to the end knots beyond them.  Outside every branch
    interval: the value of the globally nearest knot (ties resolved toward
    the smaller knot).
    """
    if outer.knot_count == 0:
        raise DomainError("outer function has no knots")
    y = Fraction(y)
    width = 2 * outer.d
    step = width + 1
    q = int(y // step) if y >= 0 else -1
    if 0 <= q <= width and y <= outer.b[q] + width and outer.tables[q].ys:
        return _interp(outer.tables[q], y)
    return _nearest_knot_value(outer, y)


def g_range(outer: OuterFunction, lo, hi) -> tuple[Fraction, Fraction]:
    """Exact min and max of the outer function over [lo, hi].

    Piecewise linearity puts extremes at the window ends or at knots inside
    the window; in nearest-knot territory the value is piecewise constant
    and the end evaluations already cover both reachable knots.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise DomainError(f"empty window [{lo}, {hi}]")
    g_lo = g_eval(outer, lo)
    g_hi = g_eval(outer, hi)
    vmin, vmax = min(g_lo, g_hi), max(g_lo, g_hi)
    for table in outer.tables:
        if not table.ys:
            continue
        i = bisect_left(table.ys, lo)
        while i < len(table.ys) and table.ys[i] <= hi:
            g = table.gs[i]
            vmin, vmax = min(vmin, g), max(vmax, g)
            i += 1
    return vmin, vmax


@dataclass(frozen=True)
class SampleSet:
    """Distinct sample points in [0, 1]^d with exact targets.

    class_tag is advisory metadata about the target's regularity; it changes
    nothing in the fit, which only needs finite exact values.
    """

    points: tuple[tuple[Fraction, ...], ...]
    targets: tuple[Fraction, ...]
    class_tag: str = "continuous"

    def __post_init__(self):
        points = tuple(tuple(Fraction(c) for c in p) for p in self.points)
        targets = tuple(Fraction(t) for t in self.targets)
        if not points:
            raise InputError("sample set is empty")
        if len(points) != len(targets):
            raise InputError(f"{len(points)} points but {len(targets)} targets")
        if self.class_tag not in CLASS_TAGS:
            raise InputError(f"class_tag must be one of {CLASS_TAGS}, got {self.class_tag!r}")
        d = len(points[0])
        seen: dict[tuple, int] = {}
        for j, p in enumerate(points):
            if len(p) != d:
                raise InputError(f"point {j} has {len(p)} coordinates, expected {d}")
            for coord in p:
                if not 0 <= coord <= 1:
                    raise DomainError(f"point {j} leaves [0, 1]^d: {p}")
            if p in seen:
                raise InputError(f"points must be pairwise distinct; points {seen[p]} and {j} coincide")
            seen[p] = j
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return len(self.points[0])

    def canonical_hash(self) -> str:
        lines = [
            ",".join(format_rational(c) for c in p) + ";" + format_rational(t)
            for p, t in zip(self.points, self.targets)
        ]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()


@dataclass(frozen=True)
class FitReport:
    """What a fit did: certificate, residuals, iteration trail."""

    mode: str
    residual_max: Fraction
    knot_count: int
    iterations: int
    convergence_history: tuple[float, ...]
    separation: object
    depth: int
    collision_count: int = 0

    def to_jsonable(self) -> dict:
        return {
            "mode": self.mode,
            "residual_max": {
                "exact": format_rational(self.residual_max),
                "approx": float(self.residual_max),
            },
            "knot_count": self.knot_count,
            "iterations": self.iterations,
            "convergence_history": list(self.convergence_history),
            "collision_count": self.collision_count,
            "depth": self.depth,
            "separation": self.separation.to_jsonable(),
        }


def _column_buckets(system: IncidenceSystem) -> dict[int, list[tuple[int, int]]]:
    buckets: dict[int, list[tuple[int, int]]] = {}
    for j, row in enumerate(system.rows):
        for col, cnt in row.items():
            buckets.setdefault(col, []).append((j, cnt))
    return buckets


def _min_norm_solution(system: IncidenceSystem, targets) -> dict[int, Fraction]:
    """g = M^T (M M^T)^-1 f, assembled sparsely from column buckets."""
    n = system.n_points
    buckets = _column_buckets(system)
    gram: list[dict[int, int]] = [{} for _ in range(n)]
    for hits in buckets.values():
        for j, cj in hits:
            grow = gram[j]
            for k, ck in hits:
                grow[k] = grow.get(k, 0) + cj * ck
    u = solve_square(gram, list(targets))
    return {
        col: sum(cnt * u[j] for j, cnt in hits)
        for col, hits in buckets.items()
    }


def _outer_from_knots(params: HashParams, system: IncidenceSystem, g: dict[int, Fraction]) -> OuterFunction:
    per_branch: list[list[tuple[Fraction, Fraction]]] = [[] for _ in range(params.branch_count)]
    for col, y in enumerate(system.knots):
        per_branch[system.knot_branch[col]].append((y, g.get(col, ZERO)))
    tables = tuple(
        KnotTable(ys=tuple(y for y, _ in knots), gs=tuple(v for _, v in knots))
        for knots in per_branch
    )
    return OuterFunction(d=params.d, b=params.b, tables=tables)


def _verify_zero_residual(system: IncidenceSystem, targets, g: dict[int, Fraction]) -> None:
    for j, (row, t) in enumerate(zip(system.rows, targets)):
        if sum(cnt * g[col] for col, cnt in row.items()) != t:
            raise InternalInvariantError(f"exact solve left a nonzero residual at point {j}")


def fit_exact(
    samples: SampleSet,
    params: HashParams,
    inner: InnerSpec,
    depth: int = 30,
) -> tuple[OuterFunction, FitReport]:
    """Exact interpolation of the samples, separation gate included.

    Raises SeparationFailure (witness attached) if the points stay
    unseparated up to the depth cap; otherwise the returned outer function
    reproduces every target exactly and the report says residual zero.
    """
    if samples.d != params.d:
        raise DomainError(f"samples have d = {samples.d}, parameters have d = {params.d}")
    system, verdict = certify_separation(params, inner, samples.points, depth)
    if not verdict.separated:
        raise SeparationFailure(
            f"samples admit a closed path after {verdict.retries} depth retries "
            f"(final depth {verdict.depth})",
            witness=verdict.witness,
        )
    g = _min_norm_solution(system, samples.targets)
    _verify_zero_residual(system, samples.targets, g)
    outer = _outer_from_knots(params, system, g)
    report = FitReport(
        mode="exact",
        residual_max=ZERO,
        knot_count=system.knot_count,
        iterations=0,
        convergence_history=(),
        separation=verdict,
        depth=system.depth,
    )
    return outer, report


def run_damped_iteration(
    system: IncidenceSystem,
    targets,
    damping: Fraction,
    tolerance: Fraction,
    max_iter: int,
) -> tuple[dict[int, Fraction], list[float], int, Fraction]:
    """The residual iteration on a fixed incidence system.

    Each round spreads damping * residual / (2d+1) onto every knot a point
    hits, averaging when several points share a knot, then re-measures the
    residual.  The sup residual may wiggle when points share knots, but the
    sum of squared residuals never grows for damping in (0, 1] (the update
    matrix has spectrum in [0, 1]); arithmetic is exact, so a rising sum of
    squares indicates a modeling bug and aborts.  Returns (knot values,
    sup-residual history, collision count, final sup).
    """
    branch_count = 2 * system.d + 1
    buckets = _column_buckets(system)
    collisions = sum(len(hits) - 1 for hits in buckets.values())
    g = {col: ZERO for col in buckets}
    residual = [Fraction(t) for t in targets]
    sup = max((abs(r) for r in residual), default=ZERO)
    sumsq = sum((r * r for r in residual), ZERO)
    history: list[float] = []
    for round_no in range(1, max_iter + 1):
        delta = {}
        for col, hits in buckets.items():
            total = sum(residual[j] * cnt for j, cnt in hits)
            weight = sum(cnt for _, cnt in hits)
            delta[col] = damping * total / (weight * branch_count)
        for col, dv in delta.items():
            g[col] += dv
        for j, row in enumerate(system.rows):
            residual[j] -= sum(cnt * delta[col] for col, cnt in row.items())
        new_sumsq = sum((r * r for r in residual), ZERO)
        if new_sumsq > sumsq:
            raise IterationDiverged(
                f"squared grid residual rose from {sumsq} to {new_sumsq} in "
                f"round {round_no} with damping {damping}"
            )
        sumsq = new_sumsq
        sup = max((abs(r) for r in residual), default=ZERO)
        history.append(float(sup))
        if sup <= tolerance:
            break
    return g, history, collisions, sup


def fit_iterative(
    f,
    params: HashParams,
    inner: InnerSpec,
    grid_level: int,
    depth: int = 30,
    max_iter: int = 100,
    tolerance=Fraction(1, 10**6),
    damping=Fraction(1, 2),
    finalize: bool = True,
) -> tuple[OuterFunction, FitReport]:
    """Damped residual iteration for the oracle f on the level-`grid_level` grid of [0, 1]^d.

    The iteration trail lands in convergence_history; with finalize=True the
    knot values are then replaced by the exact minimum-norm solve on the same
    grid, so the final grid residual is exactly zero.
    """
    damping = Fraction(damping)
    tolerance = Fraction(tolerance)
    if not 0 < damping <= 1:
        raise ParameterError(f"damping must lie in (0, 1], got {damping}")
    if tolerance <= 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    axis = grid_points(grid_level, params.gamma)
    points = tuple(itertools.product(axis, repeat=params.d))
    targets = []
    for p in points:
        raw = f(p)
        try:
            t = Fraction(raw)
        except (TypeError, ValueError, OverflowError) as exc:
            raise DomainError(
                f"target at grid point {p} is not finite ({raw!r}); "
                "fit_exact on a restricted sample set avoids the bad region"
            ) from exc
        targets.append(t)
    system, verdict = certify_separation(params, inner, points, depth)
    if finalize and not verdict.separated:
        raise SeparationFailure(
            f"grid points admit a closed path at depth {verdict.depth}",
            witness=verdict.witness,
        )
    g, history, collisions, sup = run_damped_iteration(
        system, targets, damping, tolerance, max_iter
    )
    residual_max = sup
    if finalize:
        g = _min_norm_solution(system, targets)
        _verify_zero_residual(system, targets, g)
        residual_max = ZERO
    outer = _outer_from_knots(params, system, g)
    report = FitReport(
        mode="iterative",
        residual_max=residual_max,
        knot_count=system.knot_count,
        iterations=len(history),
        convergence_history=tuple(history),
        separation=verdict,
        depth=system.depth,
        collision_count=collisions,
    )
    return outer, report


@dataclass(frozen=True)
class BranchStats:
    q: int
    knot_count: int
    value_lo: Fraction | None
    value_hi: Fraction | None
    max_jump: Fraction
    max_jump_ratio: float
    min_spacing: Fraction | None

    def to_jsonable(self) -> dict:
        return {
            "q": self.q,
            "knot_count": self.knot_count,
            "value_range": None
            if self.value_lo is None
            else [format_rational(self.value_lo), format_rational(self.value_hi)],
            "max_jump": format_rational(self.max_jump),
            "max_jump_ratio": self.max_jump_ratio,
            "min_spacing": None if self.min_spacing is None else format_rational(self.min_spacing),
        }


@dataclass(frozen=True)
class ClassReport:
    """Per-branch shape statistics: the executable face of the class trichotomy.

    Bounded targets show bounded knot ranges; jump discontinuities surface as
    adjacent-knot jumps that persist while knot spacing shrinks; unbounded
    targets force knot magnitudes of at least max |f| / (2d+1) (pigeonhole
    over the 2d+1 branch contributions).
    """

    branches: tuple[BranchStats, ...]
    total_knots: int
    value_lo: Fraction | None
    value_hi: Fraction | None
    max_abs_value: Fraction
    max_jump: Fraction
    max_jump_ratio: float
    min_spacing: Fraction | None

    def to_jsonable(self) -> dict:
        return {
            "total_knots": self.total_knots,
            "value_range": None
            if self.value_lo is None
            else [format_rational(self.value_lo), format_rational(self.value_hi)],
            "max_abs_value": format_rational(self.max_abs_value),
            "max_jump": format_rational(self.max_jump),
            "max_jump_ratio": self.max_jump_ratio,
            "min_spacing": None if self.min_spacing is None else format_rational(self.min_spacing),
            "branches": [b.to_jsonable() for b in self.branches],
        }


def merge_report(outer: OuterFunction) -> ClassReport:
    """Knot-table statistics per branch and overall."""
    stats = []
    for q, table in enumerate(outer.tables):
        if not table.ys:
            stats.append(BranchStats(q, 0, None, None, ZERO, 0.0, None))
            continue
        max_jump = ZERO
        ratio = 0.0
        spacing = None
        for y0, y1, g0, g1 in zip(table.ys, table.ys[1:], table.gs, table.gs[1:]):
            jump = abs(g1 - g0)
            gap = y1 - y0
            max_jump = max(max_jump, jump)
            try:
                ratio = max(ratio, float(jump / gap))
            except OverflowError:
                ratio = float("inf")
            spacing = gap if spacing is None else min(spacing, gap)
        stats.append(
            BranchStats(
                q=q,
                knot_count=len(table.ys),
                value_lo=min(table.gs),
                value_hi=max(table.gs),
                max_jump=max_jump,
                max_jump_ratio=ratio,
                min_spacing=spacing,
            )
        )
    populated = [s for s in stats if s.knot_count]
    spacings = [s.min_spacing for s in populated if s.min_spacing is not None]
    return ClassReport(
        branches=tuple(stats),
        total_knots=sum(s.knot_count for s in stats),
        value_lo=min((s.value_lo for s in populated), default=None),
        value_hi=max((s.value_hi for s in populated), default=None),
        max_abs_value=max(
            (max(abs(s.value_lo), abs(s.value_hi)) for s in populated), default=ZERO
        ),
        max_jump=max((s.max_jump for s in populated), default=ZERO),
        max_jump_ratio=max((s.max_jump_ratio for s in populated), default=0.0),
        min_spacing=min(spacings, default=None),
    )
