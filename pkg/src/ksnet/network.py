"""Assembled networks: evaluation, serialization, topology description.

A model is the triple (inner spec, universal constants, outer function) plus
a metadata record.  Evaluation is the two-hidden-layer superposition: feed
every branch value through the shared outer function and add the 2d+1
contributions.  The exact path works in rationals end to end; the fast path
trades Fraction arithmetic for doubles after extracting digits exactly, and
is checked against the exact path by differential tests.
"""

from __future__ import annotations

import io
import json
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import AssemblyError, DomainError, ModelFormatError
from .hashmaps import HashParams, psi_eval
from .inner import InnerSpec
from .outer import KnotTable, OuterFunction, g_eval, g_range
from .rationals import ZERO, format_rational

FORMAT_VERSION = 1


@dataclass(frozen=True)
class KNetModel:
    """A complete network; meta records how it was made (fit mode, depth, sample hash)."""

    inner: InnerSpec
    params: HashParams
    outer: OuterFunction
    meta: dict


def assemble(inner: InnerSpec, params: HashParams, outer: OuterFunction, meta: dict | None = None) -> KNetModel:
    """Glue the three components after checking they describe the same network."""
    if inner.base != params.gamma:
        raise AssemblyError(
            f"inner.base: digit base {inner.base} differs from gamma {params.gamma}"
        )
    if outer.d != params.d:
        raise AssemblyError(f"outer.d: outer function built for d = {outer.d}, parameters for d = {params.d}")
    if tuple(outer.b) != tuple(params.b):
        raise AssemblyError(f"outer.b: offsets {outer.b} differ from {params.b}")
    if len(outer.tables) != params.branch_count:
        raise AssemblyError(
            f"outer.branches: expected {params.branch_count} branch tables, got {len(outer.tables)}"
        )
    record = {"format_version": FORMAT_VERSION}
    if meta:
        record.update(meta)
    # these two mirror the construction itself, so stale values never stick
    record["format_version"] = FORMAT_VERSION
    record["series_terms"] = list(params.series_terms)
    return KNetModel(inner=inner, params=params, outer=outer, meta=record)


def _resolve_depth(model: KNetModel, depth: int | None) -> int:
    if depth is not None:
        return depth
    stored = model.meta.get("depth")
    return stored if isinstance(stored, int) and stored >= 1 else 30


def evaluate(model: KNetModel, x, depth: int | None = None, with_branches: bool = False):
    """Exact network output at x in [0, 1]^d.

    Returns (w, error_bound): deepening the truncation beyond `depth` moves
    the output by at most error_bound, measured through the range of the
    outer function over each branch's value window.  With with_branches the
    per-branch contributions are returned as a third element; they sum to w
    exactly.
    """
    depth = _resolve_depth(model, depth)
    w = ZERO
    error = ZERO
    contributions = []
    for q in range(model.params.branch_count):
        bv = psi_eval(model.params, model.inner, x, q, depth)
        gq = g_eval(model.outer, bv.value)
        w += gq
        if bv.error_bound:
            lo, hi = g_range(model.outer, bv.value, bv.upper)
            error += max(hi - gq, gq - lo)
        contributions.append(gq)
    if with_branches:
        return w, error, tuple(contributions)
    return w, error


def evaluate_batch(model: KNetModel, points, depth: int | None = None, numeric: str = "exact"):
    """Evaluate many points, preserving order; the first bad point aborts with its index.

    numeric='exact' yields (Fraction, Fraction) pairs, numeric='fast' yields
    (float, float) pairs from the double-precision path.
    """
    if numeric not in ("exact", "fast"):
        raise DomainError(f"numeric mode must be 'exact' or 'fast', got {numeric!r}")
    fast = FastEvaluator(model) if numeric == "fast" else None
    out = []
    for j, point in enumerate(points):
        try:
            if fast is None:
                out.append(evaluate(model, point, depth))
            else:
                out.append(fast.evaluate(point, depth))
        except DomainError as exc:
            raise DomainError(f"point {j}: {exc}") from exc
    return out


class FastEvaluator:
    """Double-precision evaluation against a model's exact tables.

    Digits are still extracted with integer arithmetic (so the digit string
    matches the exact path bit for bit); only the weighted sums and the
    interpolation run in floats.
    """

    def __init__(self, model: KNetModel):
        self.model = model
        inner = model.inner
        params = model.params
        self.base = inner.base
        self.wf = [float(w) for w in inner.weights]
        self.cf = [float(c) for c in inner.cumulative]
        self.lamf = [float(v) for v in params.lam]
        self.tailf = [float(t) for t in params.lam_tails]
        self.af = params.a
        self.bf = [float(b) for b in params.b]
        self.ys = [[float(y) for y in t.ys] for t in model.outer.tables]
        self.gs = [[float(g) for g in t.gs] for t in model.outer.tables]
        self.flat_ys = [y for ys in self.ys for y in ys]
        self.flat_gs = [g for gs in self.gs for g in gs]
        self.width = 2 * params.d

    def _phi(self, x: Fraction, depth: int) -> tuple[float, float]:
        if not 0 <= x < 2:
            raise DomainError(f"inner function domain is [0, 2), got {x}")
        integer_part = x.numerator // x.denominator
        frac = x - integer_part
        num, den = frac.numerator, frac.denominator
        value = 0.0
        prefix = 1.0
        for _ in range(depth):
            num *= self.base
            digit, num = divmod(num, den)
            value += self.cf[digit] * prefix
            prefix *= self.wf[digit]
        # the window collapses under the same condition as the exact path
        # (fractional part zero), so the two error bounds stay comparable
        return integer_part + value, (0.0 if frac == 0 else prefix)

    def _psi(self, point, q: int, depth: int) -> tuple[float, float]:
        value = self.bf[q]
        error = 0.0
        shift = self.af * q
        for p, coord in enumerate(point):
            v, e = self._phi(Fraction(coord) + shift, depth)
            value += self.lamf[p] * v
            error += self.lamf[p] * e + self.tailf[p] * (v + e)
        return value, error

    def _g(self, y: float) -> float:
        q = int(y // (self.width + 1)) if y >= 0 else -1
        if 0 <= q <= self.width and y <= self.bf[q] + self.width and self.ys[q]:
            ys, gs = self.ys[q], self.gs[q]
            if y <= ys[0]:
                return gs[0]
            if y >= ys[-1]:
                return gs[-1]
            i = bisect_left(ys, y)
            if ys[i] == y:
                return gs[i]
            y0, y1 = ys[i - 1], ys[i]
            return gs[i - 1] + (gs[i] - gs[i - 1]) * (y - y0) / (y1 - y0)
        i = bisect_left(self.flat_ys, y)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(self.flat_ys):
                key = (abs(self.flat_ys[j] - y), self.flat_ys[j])
                if best is None or key < best[0]:
                    best = (key, self.flat_gs[j])
        if best is None:
            raise DomainError("outer function has no knots")
        return best[1]

    def _g_deviation(self, v: float, e: float, gv: float) -> float:
        g_hi = self._g(v + e)
        lo, hi = min(gv, g_hi), max(gv, g_hi)
        i = bisect_left(self.flat_ys, v)
        while i < len(self.flat_ys) and self.flat_ys[i] <= v + e:
            g = self.flat_gs[i]
            lo, hi = min(lo, g), max(hi, g)
            i += 1
        return max(hi - gv, gv - lo)

    def evaluate(self, x, depth: int | None = None) -> tuple[float, float]:
        model = self.model
        depth = _resolve_depth(model, depth)
        point = tuple(Fraction(c) for c in x)
        if len(point) != model.params.d:
            raise DomainError(f"expected {model.params.d} coordinates, got {len(point)}")
        for p, coord in enumerate(point, start=1):
            if not 0 <= coord <= 1:
                raise DomainError(f"coordinate {p} must lie in [0, 1], got {coord}")
        w = 0.0
        error = 0.0
        for q in range(model.params.branch_count):
            v, e = self._psi(point, q, depth)
            gq = self._g(v)
            w += gq
            if e:
                error += self._g_deviation(v, e, gq)
        return w, error


def _doc_from_model(model: KNetModel) -> dict:
    branches = []
    for q, table in enumerate(model.outer.tables):
        branches.append(
            {
                "q": q,
                "knots": [
                    {"y": format_rational(y), "g": format_rational(g)}
                    for y, g in zip(table.ys, table.gs)
                ],
            }
        )
    return {
        "format_version": model.meta.get("format_version", FORMAT_VERSION),
        "d": model.params.d,
        "gamma": model.params.gamma,
        "inner_weights": [format_rational(w) for w in model.inner.weights],
        "lambda": [format_rational(v) for v in model.params.lam],
        "lambda_tail": [format_rational(t) for t in model.params.lam_tails],
        "b": list(model.params.b),
        "branches": branches,
        "meta": {k: v for k, v in model.meta.items() if k != "format_version"},
    }


def save(model: KNetModel, sink=None) -> bytes:
    """Serialize to canonical JSON bytes; optionally also write them to a path or file."""
    data = (json.dumps(_doc_from_model(model), indent=2) + "\n").encode()
    if sink is not None:
        if isinstance(sink, (str, Path)):
            Path(sink).write_bytes(data)
        else:
            sink.write(data)
    return data


def _want(doc: dict, key: str, kind, location: str):
    if key not in doc:
        raise ModelFormatError(f"missing field", location=f"{location}.{key}" if location else key)
    value = doc[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise ModelFormatError(
            f"expected {kind.__name__}, got {type(value).__name__}",
            location=f"{location}.{key}" if location else key,
        )
    return value


def _fraction_at(text, location: str) -> Fraction:
    if not isinstance(text, str):
        raise ModelFormatError(f"expected fraction string, got {type(text).__name__}", location=location)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ModelFormatError(f"not a fraction: {text!r}", location=location) from None


def load(source) -> KNetModel:
    """Parse and fully validate a model document.

    Accepts a path, bytes, a JSON string, or a readable file.  Any malformed
    or inconsistent content raises ModelFormatError naming the offending
    location; nothing partial is ever returned.
    """
    if isinstance(source, (str, Path)) and not (isinstance(source, str) and source.lstrip().startswith("{")):
        try:
            raw = Path(source).read_bytes()
        except OSError as exc:
            raise ModelFormatError(f"cannot read model file: {exc}") from exc
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif isinstance(source, str):
        raw = source.encode()
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode()
    else:
        raise ModelFormatError(f"cannot load a model from {type(source).__name__}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("top level must be an object")

    version = _want(doc, "format_version", int, "")
    if version > FORMAT_VERSION:
        raise ModelFormatError(
            f"format_version {version} is newer than the supported {FORMAT_VERSION}; upgrade the library",
            location="format_version",
        )
    if version < 1:
        raise ModelFormatError(f"unrecognized format_version {version}", location="format_version")

    d = _want(doc, "d", int, "")
    gamma = _want(doc, "gamma", int, "")
    inner_weights = _want(doc, "inner_weights", list, "")
    lam = _want(doc, "lambda", list, "")
    lam_tail = _want(doc, "lambda_tail", list, "")
    b = _want(doc, "b", list, "")
    branches = _want(doc, "branches", list, "")
    meta = _want(doc, "meta", dict, "")

    weights = tuple(
        _fraction_at(w, f"inner_weights[{i}]") for i, w in enumerate(inner_weights)
    )
    lam_values = tuple(_fraction_at(v, f"lambda[{i}]") for i, v in enumerate(lam))
    tail_values = tuple(_fraction_at(t, f"lambda_tail[{i}]") for i, t in enumerate(lam_tail))
    for i, entry in enumerate(b):
        if isinstance(entry, bool) or not isinstance(entry, int):
            raise ModelFormatError("expected integer", location=f"b[{i}]")
    series = meta.get("series_terms")
    if series is not None and not (
        isinstance(series, list) and all(isinstance(s, int) and s >= 0 for s in series)
    ):
        raise ModelFormatError("series_terms must be nonnegative integers", location="meta.series_terms")

    try:
        inner = InnerSpec(base=gamma, weights=weights)
    except ValueError as exc:
        raise ModelFormatError(str(exc), location="inner_weights") from exc
    try:
        params = HashParams(
            d=d,
            gamma=gamma,
            a=Fraction(1, gamma * (gamma - 1)) if gamma >= 2 else Fraction(0),
            lam=lam_values,
            lam_tails=tail_values,
            series_terms=tuple(series) if series is not None else (0,) * d,
            b=tuple(b),
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc), location="lambda") from exc

    expected_q = params.branch_count
    if len(branches) != expected_q:
        raise ModelFormatError(
            f"expected {expected_q} branches, got {len(branches)}", location="branches"
        )
    tables = []
    for i, entry in enumerate(branches):
        if not isinstance(entry, dict):
            raise ModelFormatError("expected object", location=f"branches[{i}]")
        q = _want(entry, "q", int, f"branches[{i}]")
        if q != i:
            raise ModelFormatError(f"branches must appear in order; got q = {q}", location=f"branches[{i}].q")
        knots = _want(entry, "knots", list, f"branches[{i}]")
        ys, gs = [], []
        for k, knot in enumerate(knots):
            if not isinstance(knot, dict):
                raise ModelFormatError("expected object", location=f"branches[{i}].knots[{k}]")
            ys.append(_fraction_at(knot.get("y"), f"branches[{i}].knots[{k}].y"))
            gs.append(_fraction_at(knot.get("g"), f"branches[{i}].knots[{k}].g"))
        try:
            tables.append(KnotTable(ys=tuple(ys), gs=tuple(gs)))
        except ValueError as exc:
            raise ModelFormatError(str(exc), location=f"branches[{i}].knots") from exc
    try:
        outer = OuterFunction(d=d, b=tuple(b), tables=tuple(tables))
        return assemble(inner, params, outer, meta=dict(meta))
    except ValueError as exc:
        raise ModelFormatError(str(exc), location="branches") from exc


@dataclass(frozen=True)
class TopologyReport:
    """Layer widths, universal constants, and knot counts of a model."""

    d: int
    gamma: int
    layer_widths: tuple[int, int, int, int]
    a: Fraction
    lam: tuple[Fraction, ...]
    lam_tails: tuple[Fraction, ...]
    b: tuple[int, ...]
    inner_weights: tuple[Fraction, ...]
    knot_counts: tuple[int, ...]
    meta: dict

    def to_jsonable(self) -> dict:
        return {
            "d": self.d,
            "gamma": self.gamma,
            "layer_widths": list(self.layer_widths),
            "a": format_rational(self.a),
            "lambda": [format_rational(v) for v in self.lam],
            "lambda_tail": [format_rational(t) for t in self.lam_tails],
            "b": list(self.b),
            "inner_weights": [format_rational(w) for w in self.inner_weights],
            "knot_counts": list(self.knot_counts),
            "total_knots": sum(self.knot_counts),
            "meta": dict(self.meta),
        }

    def dot(self) -> str:
        """Graphviz text of the network graph; inner nodes are labeled (p, q)."""
        d = self.d
        lines = ["digraph ksnet {", "  rankdir=LR;"]
        for p in range(1, d + 1):
            lines.append(f'  x{p} [label="x{p}", shape=circle];')
        for q in range(2 * d + 1):
            for p in range(1, d + 1):
                lines.append(f'  h{p}_{q} [label="phi(x{p}+a*{q})", shape=box];')
                lines.append(f"  x{p} -> h{p}_{q};")
            lines.append(f'  z{q} [label="g(. + b{q})", shape=box];')
            for p in range(1, d + 1):
                lines.append(f"  h{p}_{q} -> z{q};")
        lines.append('  w [label="w", shape=doublecircle];')
        for q in range(2 * d + 1):
            lines.append(f"  z{q} -> w;")
        lines.append("}")
        return "\n".join(lines)


def describe(model: KNetModel) -> TopologyReport:
    """Topology and constants: widths (d, d(2d+1), 2d+1, 1) plus the constant tables."""
    d = model.params.d
    return TopologyReport(
        d=d,
        gamma=model.params.gamma,
        layer_widths=(d, d * (2 * d + 1), 2 * d + 1, 1),
        a=model.params.a,
        lam=model.params.lam,
        lam_tails=model.params.lam_tails,
        b=model.params.b,
        inner_weights=model.inner.weights,
        knot_counts=tuple(len(t.ys) for t in model.outer.tables),
        meta=dict(model.meta),
    )
