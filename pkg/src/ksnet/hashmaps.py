"""Branch hash maps and the incidence machinery that certifies a sample set solvable.

Branch q shifts every coordinate by a*q, pushes it through the inner
function, mixes the d results with weights lam_p, and offsets the sum by
b_q = (2d+1)q.  Because the mixed sum stays inside [0, 2d] and consecutive
offsets differ by 2d+1, branch value ranges are pairwise disjoint intervals
with gaps of at least 1: values from different branches can never collide.
That is what makes one shared outer function per branch workable, and it
pins every incidence-matrix entry to 0 or 1.

Solvability of a concrete sample set is not assumed, it is tested: the
incidence matrix of points against distinct branch values has full row rank
iff exact interpolation is possible, and a left-kernel vector is a closed
path, a weighting of the points that cancels every branch equation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import DomainError, InputError, InternalInvariantError, ParameterError
from .inner import InnerSpec, phi_eval
from .linsolve import left_kernel_vector
from .rationals import ONE, ZERO, format_rational, grid_points

DEFAULT_SERIES_TOLERANCE = Fraction(1, 10**18)
DEPTH_CAP = 240


def lambda_series(p: int, d: int, gamma: int, tolerance) -> tuple[Fraction, Fraction, int]:
    """Truncated mixing weight lam_p with a rigorous tail bound.

    lam_1 is exactly 1.  For p >= 2 the series sum_r gamma**(-(p-1)(d**r-1)/(d-1))
    is summed until the geometric majorant of the remainder,
    gamma**(-e(R+1)) * gamma/(gamma-1), drops to `tolerance` or below.
    Returns (value, tail bound, number of terms summed).
    """
    if p < 1 or p > d:
        raise ParameterError(f"p must be in 1..{d}, got {p}")
    tolerance = Fraction(tolerance)
    if tolerance <= 0:
        raise ParameterError(f"series tolerance must be positive, got {tolerance}")
    if p == 1:
        return ONE, ZERO, 0
    value = ZERO
    r = 0
    while True:
        r += 1
        exponent = (p - 1) * (d**r - 1) // (d - 1)
        value += Fraction(1, gamma**exponent)
        next_exponent = (p - 1) * (d ** (r + 1) - 1) // (d - 1)
        tail = Fraction(gamma, gamma - 1) / Fraction(gamma**next_exponent)
        if tail <= tolerance:
            return value, tail, r


@dataclass(frozen=True)
class HashParams:
    """The universal constants of a (d, gamma) network.

    a shifts coordinates between branches, lam mixes coordinates within a
    branch (truncated values, with rigorous tail bounds carried alongside),
    and b spaces the branch output intervals [b_q, b_q + 2d] a unit apart.
    """

    d: int
    gamma: int
    a: Fraction
    lam: tuple[Fraction, ...]
    lam_tails: tuple[Fraction, ...]
    series_terms: tuple[int, ...]
    b: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.d < 2:
            raise ParameterError(f"d must be >= 2, got {self.d}")
        if self.gamma < 2 * self.d + 2:
            raise ParameterError(
                f"gamma must be >= 2d+2 = {2 * self.d + 2}, got {self.gamma}"
            )
        if self.a != Fraction(1, self.gamma * (self.gamma - 1)):
            raise ParameterError(f"a must equal 1/(gamma(gamma-1)), got {self.a}")
        if len(self.lam) != self.d or len(self.lam_tails) != self.d:
            raise ParameterError(f"need {self.d} mixing weights, got {len(self.lam)}")
        if self.lam[0] != 1:
            raise ParameterError(f"lam_1 must be exactly 1, got {self.lam[0]}")
        for p, (lam, tail) in enumerate(zip(self.lam, self.lam_tails), start=1):
            if not 0 < lam <= 1:
                raise ParameterError(f"lam_{p} must lie in (0, 1], got {lam}")
            if tail < 0 or lam + tail > 1:
                raise ParameterError(f"lam_{p} tail bound {tail} is inconsistent")
        expected_b = tuple((2 * self.d + 1) * q for q in range(2 * self.d + 1))
        if not self.b:
            object.__setattr__(self, "b", expected_b)
        elif tuple(self.b) != expected_b:
            raise ParameterError(f"b must be (2d+1)q for q = 0..2d, got {self.b}")

    @property
    def branch_count(self) -> int:
        return 2 * self.d + 1


def make_params(d: int, gamma: int, series_tolerance=DEFAULT_SERIES_TOLERANCE) -> HashParams:
    """Universal constants for dimension d and base gamma >= 2d+2."""
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    if gamma < 2 * d + 2:
        raise ParameterError(f"gamma must be >= 2d+2 = {2 * d + 2}, got {gamma}")
    lam, tails, terms = [], [], []
    for p in range(1, d + 1):
        value, tail, count = lambda_series(p, d, gamma, series_tolerance)
        lam.append(value)
        tails.append(tail)
        terms.append(count)
    return HashParams(
        d=d,
        gamma=gamma,
        a=Fraction(1, gamma * (gamma - 1)),
        lam=tuple(lam),
        lam_tails=tuple(tails),
        series_terms=tuple(terms),
    )


@dataclass(frozen=True)
class BranchValue:
    """A truncated branch-map value; the untruncated value lies in [value, value + error_bound]."""

    q: int
    value: Fraction
    error_bound: Fraction

    @property
    def upper(self) -> Fraction:
        return self.value + self.error_bound


def psi_eval(params: HashParams, inner: InnerSpec, x, q: int, depth: int) -> BranchValue:
    """Branch q's value at x in [0, 1]^d, truncation depth `depth`.

    The error bound collects the inner truncation widths weighted by lam_p
    plus the lam tail applied to the inner value itself; both effects only
    add mass, so the window is one sided.
    """
    point = tuple(Fraction(c) for c in x)
    if len(point) != params.d:
        raise DomainError(f"expected {params.d} coordinates, got {len(point)}")
    if not 0 <= q <= 2 * params.d:
        raise DomainError(f"branch index must lie in 0..{2 * params.d}, got {q}")
    for p, coord in enumerate(point, start=1):
        if not 0 <= coord <= 1:
            raise DomainError(f"coordinate {p} must lie in [0, 1], got {coord}")
    value = Fraction(params.b[q])
    error = ZERO
    shift = params.a * q
    for lam, tail, coord in zip(params.lam, params.lam_tails, point):
        iv = phi_eval(inner, coord + shift, depth)
        value += lam * iv.value
        error += lam * iv.error_bound + tail * iv.upper
    return BranchValue(q=q, value=value, error_bound=error)


@dataclass(frozen=True)
class BranchRange:
    q: int
    lo: int
    hi: int
    observed_lo: Fraction
    observed_hi: Fraction

    def to_jsonable(self) -> dict:
        return {
            "q": self.q,
            "interval": [self.lo, self.hi],
            "observed": [format_rational(self.observed_lo), format_rational(self.observed_hi)],
        }


@dataclass(frozen=True)
class RangeReport:
    """Grid-sweep evidence that branch values stay in their disjoint intervals."""

    d: int
    gamma: int
    probe_level: int
    points_checked: int
    branches: tuple[BranchRange, ...]
    violations: tuple[str, ...]
    min_gap: Fraction
    passed: bool

    def to_jsonable(self) -> dict:
        return {
            "passed": self.passed,
            "probe_level": self.probe_level,
            "points_checked": self.points_checked,
            "min_gap": format_rational(self.min_gap),
            "branches": [b.to_jsonable() for b in self.branches],
            "violations": list(self.violations),
        }


def check_ranges(params: HashParams, inner: InnerSpec, probe_level: int = 1, depth: int = 30) -> RangeReport:
    """Sweep the level-`probe_level` grid of [0, 1]^d through every branch.

    Confirms each value window [value, value + error_bound] sits inside
    [b_q, b_q + 2d] and measures the observed inter-branch gap (structurally
    at least 1).  Grid size is (gamma**probe_level + 1)**d, so keep the level
    small for d > 2.
    """
    axis = grid_points(probe_level, params.gamma)
    width = 2 * params.d
    lo = [None] * params.branch_count
    hi = [None] * params.branch_count
    violations = []
    count = 0
    for point in itertools.product(axis, repeat=params.d):
        count += 1
        for q in range(params.branch_count):
            bv = psi_eval(params, inner, point, q, depth)
            if bv.value < params.b[q] or bv.upper > params.b[q] + width:
                if len(violations) < 10:
                    violations.append(f"q={q}, x={point}, value={bv.value}")
            if lo[q] is None or bv.value < lo[q]:
                lo[q] = bv.value
            if hi[q] is None or bv.upper > hi[q]:
                hi[q] = bv.upper
    branches = tuple(
        BranchRange(q=q, lo=params.b[q], hi=params.b[q] + width, observed_lo=lo[q], observed_hi=hi[q])
        for q in range(params.branch_count)
    )
    min_gap = min(lo[q + 1] - hi[q] for q in range(params.branch_count - 1))
    return RangeReport(
        d=params.d,
        gamma=params.gamma,
        probe_level=probe_level,
        points_checked=count,
        branches=branches,
        violations=tuple(violations),
        min_gap=min_gap,
        passed=not violations and min_gap >= 1,
    )


@dataclass
class IncidenceSystem:
    """Points against distinct branch values: the solvability object of a fit.

    rows[j] maps knot index to hit count for point j; every row sums to
    2d+1, and disjoint branch ranges force each entry to 0 or 1.
    """

    points: tuple[tuple[Fraction, ...], ...]
    depth: int
    d: int
    knots: tuple[Fraction, ...]
    knot_branch: tuple[int, ...]
    rows: tuple[dict[int, int], ...]

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def knot_count(self) -> int:
        return len(self.knots)

    def row_sums(self) -> list[int]:
        return [sum(row.values()) for row in self.rows]

    def dense(self) -> list[list[int]]:
        return [
            [row.get(col, 0) for col in range(len(self.knots))]
            for row in self.rows
        ]


def build_incidence(params: HashParams, inner: InnerSpec, points, depth: int) -> IncidenceSystem:
    """Evaluate every branch at every point and tabulate hits on distinct values."""
    pts = tuple(tuple(Fraction(c) for c in p) for p in points)
    if not pts:
        raise DomainError("need at least one point")
    seen: dict[tuple, int] = {}
    for j, p in enumerate(pts):
        if p in seen:
            raise InputError(f"points must be pairwise distinct; points {seen[p]} and {j} coincide")
        seen[p] = j
    values = [
        [psi_eval(params, inner, p, q, depth).value for q in range(params.branch_count)]
        for p in pts
    ]
    knots = sorted({v for per_point in values for v in per_point})
    index = {v: i for i, v in enumerate(knots)}
    branch_of: dict[int, int] = {}
    rows = []
    for per_point in values:
        row: dict[int, int] = {}
        for q, v in enumerate(per_point):
            col = index[v]
            row[col] = row.get(col, 0) + 1
            prior = branch_of.setdefault(col, q)
            if prior != q:
                raise InternalInvariantError(
                    f"knot {v} reached from branches {prior} and {q}; ranges must be disjoint"
                )
        if sum(row.values()) != params.branch_count:
            raise InternalInvariantError("incidence row sum differs from 2d+1")
        rows.append(row)
    return IncidenceSystem(
        points=pts,
        depth=depth,
        d=params.d,
        knots=tuple(knots),
        knot_branch=tuple(branch_of[i] for i in range(len(knots))),
        rows=tuple(rows),
    )


@dataclass(frozen=True)
class SeparationVerdict:
    """Exact rank certificate for an incidence system.

    Not separated comes with a witness: point weights, first nonzero scaled
    to +1, that cancel every branch equation (two coincident generating
    points yield (1, -1)).
    """

    separated: bool
    rank: int
    n_points: int
    knot_count: int
    depth: int
    retries: int = 0
    witness: tuple[Fraction, ...] | None = None

    def to_jsonable(self) -> dict:
        return {
            "separated": self.separated,
            "rank": self.rank,
            "n_points": self.n_points,
            "knot_count": self.knot_count,
            "depth": self.depth,
            "retries": self.retries,
            "witness": None if self.witness is None else [format_rational(w) for w in self.witness],
        }


def separation_check(system: IncidenceSystem) -> SeparationVerdict:
    """Decide full row rank of the incidence matrix by exact elimination."""
    rank, kernel = left_kernel_vector(system.rows)
    return SeparationVerdict(
        separated=kernel is None,
        rank=rank,
        n_points=system.n_points,
        knot_count=system.knot_count,
        depth=system.depth,
        witness=kernel,
    )


def certify_separation(
    params: HashParams,
    inner: InnerSpec,
    points,
    depth: int,
    depth_cap: int = DEPTH_CAP,
) -> tuple[IncidenceSystem, SeparationVerdict]:
    """Separation with adaptive refinement: on failure, double the depth up to the cap.

    Collisions caused by truncation dissolve at higher depth; a collision
    that survives the cap is reported as not separated, witness attached.
    """
    current = min(depth, depth_cap)
    retries = 0
    while True:
        system = build_incidence(params, inner, points, current)
        verdict = separation_check(system)
        if verdict.separated or current >= depth_cap:
            return system, replace(verdict, retries=retries)
        current = min(2 * current, depth_cap)
        retries += 1
