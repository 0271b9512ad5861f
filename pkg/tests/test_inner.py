"""The monotone inner map phi: digit weights, truncation bounds, invariants."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksnet.errors import DomainError, ParameterError
from ksnet.inner import InnerSpec, default_inner_spec, phi_eval, phi_exact, verify_inner

SPEC6 = default_inner_spec(6)

rationals_01 = st.fractions(min_value=0, max_value=1, max_denominator=10**9)
depths = st.integers(min_value=1, max_value=40)


def test_default_spec_base_6():
    assert SPEC6.base == 6
    assert SPEC6.weights == (
        Fraction(1, 2),
        Fraction(1, 10),
        Fraction(1, 10),
        Fraction(1, 10),
        Fraction(1, 10),
        Fraction(1, 10),
    )
    assert SPEC6.cumulative == (
        Fraction(0),
        Fraction(1, 2),
        Fraction(3, 5),
        Fraction(7, 10),
        Fraction(4, 5),
        Fraction(9, 10),
    )


def test_spec_validation():
    w = SPEC6.weights
    with pytest.raises(ParameterError):
        InnerSpec(base=1, weights=(Fraction(1),))
    with pytest.raises(ParameterError):
        InnerSpec(base=6, weights=w[:5])
    with pytest.raises(ParameterError):
        # first weight above 1/2
        InnerSpec(base=6, weights=(Fraction(3, 5),) + w[1:])
    with pytest.raises(ParameterError):
        # weights must sum to 1
        InnerSpec(base=6, weights=(Fraction(1, 2),) + (Fraction(1, 11),) * 5)


def test_phi_known_values():
    v = phi_eval(SPEC6, Fraction(1, 6), 1)
    assert (v.value, v.error_bound) == (Fraction(1, 2), Fraction(1, 10))
    assert v.upper == Fraction(3, 5)
    assert phi_exact(SPEC6, Fraction(0)) == 0
    assert phi_exact(SPEC6, Fraction(1)) == 1
    assert phi_exact(SPEC6, Fraction(5, 6)) == Fraction(9, 10)
    # digits 0,1: c(0) + c(1) w(0) = (1/2)(1/2)
    assert phi_exact(SPEC6, Fraction(1, 36)) == Fraction(1, 4)


def test_phi_shift_by_one():
    assert phi_exact(SPEC6, Fraction(7, 6)) == Fraction(3, 2)
    assert phi_exact(SPEC6, Fraction(1, 2) + 1) == phi_exact(SPEC6, Fraction(1, 2)) + 1


def test_phi_geometric_limit():
    # 1/10 has base-6 digits 0,3,3,3,... so phi(1/10) = (7/10)(1/2) * 10/9 = 7/18.
    limit = Fraction(7, 18)
    for depth in (5, 10, 30):
        v = phi_eval(SPEC6, Fraction(1, 10), depth)
        assert v.value <= limit <= v.upper
        assert v.error_bound == Fraction(1, 2) * Fraction(1, 10) ** (depth - 1)


def test_phi_all_max_digits_hits_one():
    # digits 5,5,...,5: the truncation reaches 1 - 10^-k and the window closes at 1.
    k = 40
    v = phi_eval(SPEC6, Fraction(6**k - 1, 6**k), k)
    assert v.value == 1 - Fraction(1, 10**k)
    assert v.upper == 1


def test_phi_exact_requires_terminating_input():
    with pytest.raises(DomainError):
        phi_exact(SPEC6, Fraction(1, 10))


def test_phi_domain():
    with pytest.raises(DomainError):
        phi_eval(SPEC6, Fraction(-1, 6), 3)
    with pytest.raises(DomainError):
        phi_eval(SPEC6, Fraction(2), 3)


@given(rationals_01, depths)
@settings(max_examples=300)
def test_error_bound_contracts(x, depth):
    """The window after k digits is at most 2**-k wide."""
    v = phi_eval(SPEC6, x, depth)
    assert 0 <= v.error_bound <= Fraction(1, 2**depth)
    assert 0 <= v.value <= v.upper <= 1


@given(st.integers(min_value=0, max_value=6**8), depths)
@settings(max_examples=300)
def test_truncation_brackets_exact_value(j, depth):
    """For terminating inputs the exact value sits inside the truncation window."""
    x = Fraction(j, 6**8)
    exact = phi_exact(SPEC6, x)
    v = phi_eval(SPEC6, x, depth)
    assert v.value <= exact <= v.upper


@given(rationals_01, rationals_01, depths)
@settings(max_examples=300)
def test_monotone_truncations(x, y, depth):
    """Truncated phi preserves order because digit strings order lexicographically."""
    if x > y:
        x, y = y, x
    assert phi_eval(SPEC6, x, depth).value <= phi_eval(SPEC6, y, depth).value


@given(rationals_01, rationals_01)
@settings(max_examples=200)
def test_holder_with_constant_four(x, y):
    """|phi(x) - phi(y)| <= 4 |x - y|^(ln 2 / ln 6), allowing truncation slack."""
    if x == y:
        return
    alpha = math.log(2) / math.log(6)
    vx, vy = phi_eval(SPEC6, x, 30), phi_eval(SPEC6, y, 30)
    gap = abs(float(vx.value - vy.value)) - float(vx.error_bound + vy.error_bound)
    assert gap <= 4.0 * abs(float(x - y)) ** alpha * (1 + 1e-12)


def test_verify_inner_passes():
    report = verify_inner(SPEC6, samples=500, depth=30, seed=0)
    assert report.passed
    names = [c.name for c in report.checks]
    assert names == ["monotone", "holder", "shift", "range"]
    doc = report.to_jsonable()
    assert doc["passed"] is True
    holder = next(c for c in doc["checks"] if c["name"] == "holder")
    assert holder["passed"] is True
    assert "bound 4" in holder["detail"]


def test_verify_inner_other_base():
    report = verify_inner(default_inner_spec(8), samples=200, depth=20, seed=3)
    assert report.passed
