"""Exact sparse Gaussian elimination over the rationals.

Rows are {column: Fraction} dicts.  All arithmetic is exact, so rank
decisions and kernel vectors are certificates, not estimates.  Problem sizes
are desk scale (hundreds of rows), which keeps the cubic worst case
irrelevant; incidence rows carry a handful of entries each, which keeps the
practical cost near linear.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InternalInvariantError

ZERO = Fraction(0)
ONE = Fraction(1)


def _sub_scaled(target: dict, source: dict, factor: Fraction) -> None:
    # target -= factor * source, dropping entries that cancel to zero
    for col, val in source.items():
        new = target.get(col, ZERO) - factor * val
        if new:
            target[col] = new
        else:
            target.pop(col, None)


def left_kernel_vector(rows) -> tuple[int, tuple[Fraction, ...] | None]:
    """Rank of the stacked rows, plus a left-kernel witness if they are dependent.

    Maintains a reduced pivot set: every stored pivot row is zero in every
    other pivot column, so one pass reduces an incoming row completely.  The
    transform log expresses each pivot row over the original rows; when a row
    cancels, its log entry is a kernel vector.  Elimination continues past the
    first cancellation so the reported rank is the rank of the whole stack;
    the witness kept is the first one found, scaled so its first nonzero
    entry (in input order) is +1.
    """
    n = len(rows)
    pivots: list[tuple[int, dict, dict]] = []  # (pivot column, reduced row, transform)
    witness: tuple[Fraction, ...] | None = None
    for idx in range(n):
        row = {col: Fraction(val) for col, val in rows[idx].items() if val}
        trans = {idx: ONE}
        for pcol, prow, ptrans in pivots:
            coeff = row.get(pcol)
            if coeff:
                factor = coeff / prow[pcol]
                _sub_scaled(row, prow, factor)
                _sub_scaled(trans, ptrans, factor)
        if not row:
            if witness is None:
                mu = [ZERO] * n
                for j, coeff in trans.items():
                    mu[j] = coeff
                lead = next(c for c in mu if c)
                witness = tuple(c / lead for c in mu)
            continue
        pcol = min(row)
        # clear the new pivot column from the stored pivots to keep them reduced
        for _, prow, ptrans in pivots:
            coeff = prow.get(pcol)
            if coeff:
                factor = coeff / row[pcol]
                _sub_scaled(prow, row, factor)
                _sub_scaled(ptrans, trans, factor)
        pivots.append((pcol, row, trans))
    return len(pivots), witness


def solve_square(rows, rhs) -> list[Fraction]:
    """Solve A u = rhs for square A given as sparse rows; exact, with row pivoting."""
    n = len(rows)
    if len(rhs) != n:
        raise InternalInvariantError(f"system is {n}x{n} but rhs has {len(rhs)} entries")
    a = [{col: Fraction(val) for col, val in row.items() if val} for row in rows]
    b = [Fraction(v) for v in rhs]
    for i in range(n):
        pivot_row = next((j for j in range(i, n) if a[j].get(i)), None)
        if pivot_row is None:
            raise InternalInvariantError("singular system in exact solve")
        if pivot_row != i:
            a[i], a[pivot_row] = a[pivot_row], a[i]
            b[i], b[pivot_row] = b[pivot_row], b[i]
        piv = a[i][i]
        for j in range(i + 1, n):
            coeff = a[j].get(i)
            if coeff:
                factor = coeff / piv
                _sub_scaled(a[j], a[i], factor)
                b[j] -= factor * b[i]
    u = [ZERO] * n
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for col, val in a[i].items():
            if col > i:
                acc -= val * u[col]
        u[i] = acc / a[i][i]
    return u
