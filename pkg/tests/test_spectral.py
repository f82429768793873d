import math

import numpy as np
import pytest
from sympy import Rational

from lagcheck.services.errors import InvalidLags, OrderOutOfRange
from lagcheck.services.expsum import eval_partial_sum
from lagcheck.services.model import (
    CyclicHistory,
    LagPair,
    Mode,
    VerdictKind,
    canonical_history,
    identity_tensor,
    validate_tensor,
)
from lagcheck.services.spectral import (
    ALWAYS_CONSISTENT,
    BRACKET_SCALE,
    NEVER_CONSISTENT,
    BoundaryKind,
    GridClass,
    Interval,
    UNLISTED_PAIR_NOTE,
    admissible_region,
    build_positivity_polynomial,
    classify,
    consistency_grid,
    cycle_integral,
    exact_polynomial,
    known_region_oracle,
    leading_coefficient_bounds,
    positive_real_roots,
    published_bracket,
    region_text,
    sign_variations,
    verdict_sweep,
)

ORDERS = [(n, m) for n in range(5) for m in range(5)]
GRID_POINTS = 512

CONSISTENT_PAIRS = {
    (0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2),
    (3, 2), (2, 3), (3, 3), (3, 4), (4, 3), (4, 4),
}


@pytest.fixture(autouse=True)
def scan_size(monkeypatch):
    monkeypatch.setenv("LAGCHECK_SCAN_POINTS", "1024")


@pytest.fixture(scope="module")
def weak_grid():
    return consistency_grid(Mode.WEAK, points=GRID_POINTS)


# ---------------- Positivity polynomial ----------------

def test_fourier_law_polynomial():
    assert build_positivity_polynomial(0, 0, 3.0).coefficients == (1.0,)


def test_simplest_memory_law_polynomial():
    assert build_positivity_polynomial(1, 1, 1.0).coefficients == pytest.approx((1.0, 1.0))


def test_two_three_polynomial_at_unit_ratio():
    c = build_positivity_polynomial(2, 3, 1.0).coefficients
    assert c == pytest.approx((1.0, 0.0, 1.0 / 12.0), abs=1e-15)


@pytest.mark.parametrize("n,m", ORDERS)
def test_polynomial_matches_the_complex_product(n, m):
    r = 0.7
    poly = build_positivity_polynomial(n, m, r)
    assert poly.evaluate(0.0) == 1.0
    assert poly.degree <= (n + m) // 2
    for s in (0.5, 1.0, 2.0):
        direct = (eval_partial_sum(m, 1j * r * s) * eval_partial_sum(n, 1j * s).conjugate()).real
        assert poly.evaluate(s * s) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_polynomial_helpers():
    poly = build_positivity_polynomial(2, 2, 1.0)
    assert poly.derivative() == pytest.approx((poly.coefficients[1], 2 * poly.coefficients[2]))
    assert poly.scaled(4.0) == pytest.approx(tuple(4.0 * c for c in poly.coefficients))
    assert poly.leading == poly.coefficients[-1]


def test_polynomial_input_checks():
    with pytest.raises(OrderOutOfRange):
        build_positivity_polynomial(5, 0, 1.0)
    with pytest.raises(InvalidLags):
        build_positivity_polynomial(1, 1, 0.0)
    with pytest.raises(InvalidLags):
        build_positivity_polynomial(1, 1, -2.0)


# ---------------- Root isolation ----------------

def test_sign_variations_skip_zeros():
    assert sign_variations([1.0, 0.0, -2.0, 3.0]) == 2
    assert sign_variations([1.0, 2.0]) == 0


def test_positive_roots_of_a_quadratic():
    # (u - 1)(u - 3) = 3 - 4u + u^2
    assert positive_real_roots([3.0, -4.0, 1.0]) == pytest.approx([1.0, 3.0])


def test_positive_roots_ignore_negative_ones():
    # (u + 2)(u - 0.5)
    assert positive_real_roots([-1.0, 1.5, 1.0]) == pytest.approx([0.5])
    assert positive_real_roots([1.0, 2.0, 1.0]) == []


def test_double_root_is_found_once():
    # (u - 2)^2
    roots = positive_real_roots([4.0, -4.0, 1.0])
    assert len(roots) == 1
    assert roots[0] == pytest.approx(2.0, abs=1e-6)


def test_close_roots_are_separated():
    # (u - 1)(u - 1.000001)
    roots = positive_real_roots([1.000001, -2.000001, 1.0])
    assert len(roots) == 2
    assert roots[0] == pytest.approx(1.0, abs=1e-9)
    assert roots[1] == pytest.approx(1.000001, abs=1e-9)


def test_isolation_runs_on_the_exact_float_values():
    poly = exact_polynomial([0.1, -1.0, 2.0])
    assert poly.all_coeffs() == [Rational(2), Rational(-1), Rational(0.1)]
    assert Rational(0.1) != Rational(1, 10)
    assert sign_variations([0.1, -1.0, 2.0]) == 2


# ---------------- Cycle integral ----------------

def test_cycle_integral_simplest_case():
    lags = LagPair(1.0, 1.0)
    value = cycle_integral(1, 1, lags, identity_tensor(), canonical_history(1.0))
    assert value == pytest.approx(-math.pi, rel=1e-12)


def test_cycle_integral_vanishes_where_the_bracket_does():
    lags = LagPair(1.0, 0.3)
    value = cycle_integral(2, 0, lags, identity_tensor(), canonical_history(math.sqrt(2.0)))
    assert value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("omega", [0.1, 1.0, 7.5])
def test_cycle_integral_fourier_law(omega):
    value = cycle_integral(0, 0, LagPair(1.0, 1.0), identity_tensor(), canonical_history(omega))
    assert value == pytest.approx(-math.pi / omega)


def test_cycle_integral_scales_with_the_quadratic_form():
    t = validate_tensor(np.diag([2.0, 1.0, 1.0]))
    h = CyclicHistory(f=[1.0, 0.0, 0.0], g=[0.0, 1.0, 0.0], omega=1.0)
    value = cycle_integral(1, 1, LagPair(1.0, 1.0), t, h)
    assert value == pytest.approx(-3.0 * math.pi)


def test_cycle_integral_sign_follows_the_polynomial():
    rng = np.random.default_rng(7)
    t = identity_tensor()
    for n, m in ORDERS:
        if n == 0:
            continue
        for _ in range(200):
            r = float(np.exp(rng.uniform(-3.0, 3.0)))
            s = float(np.exp(rng.uniform(-3.0, 3.0)))
            p = build_positivity_polynomial(n, m, r).evaluate(s * s)
            if abs(p) < 1e-9:
                continue
            value = cycle_integral(n, m, LagPair.from_ratio(r), t, canonical_history(s))
            assert np.sign(value) == -np.sign(p)


# ---------------- Classification ----------------

def test_two_one_fails_below_half():
    verdict = classify(2, 1, LagPair(1.0, 0.4))
    assert verdict.kind is VerdictKind.INCONSISTENT
    assert verdict.witness_omega > 0


def test_two_one_at_the_boundary_is_consistent():
    assert classify(2, 1, LagPair(2.0, 1.0), Mode.STRICT).kind is VerdictKind.CONSISTENT_STRICT


def test_two_two_at_unit_lags():
    assert classify(2, 2, LagPair(1.0, 1.0)).kind is VerdictKind.CONSISTENT_STRICT


@pytest.mark.parametrize("r", [0.1, 0.3, 1.0, 4.0, 50.0])
def test_four_one_always_has_a_witness(r):
    lags = LagPair.from_ratio(r)
    verdict = classify(4, 1, lags)
    assert verdict.kind is VerdictKind.INCONSISTENT
    u = verdict.witness_u
    assert u == pytest.approx((verdict.witness_omega * lags.tau_q) ** 2)
    assert build_positivity_polynomial(4, 1, r).evaluate(u) < 0


def test_two_zero_witness_lies_beyond_the_root():
    verdict = classify(2, 0, LagPair(1.0, 1.0))
    assert verdict.kind is VerdictKind.INCONSISTENT
    assert verdict.witness_omega > math.sqrt(2.0)
    assert verdict.witness_omega == pytest.approx(math.sqrt(2.0), rel=1e-3)


@pytest.mark.parametrize("n,m,r", [(2, 0, 1.0), (2, 1, 0.4), (4, 1, 1.0), (1, 3, 1.0), (0, 2, 2.0)])
def test_witness_sits_just_past_the_last_root(n, m, r):
    poly = build_positivity_polynomial(n, m, r)
    verdict = classify(n, m, LagPair.from_ratio(r))
    assert verdict.kind is VerdictKind.INCONSISTENT
    assert poly.evaluate(verdict.witness_u) < 0
    roots = positive_real_roots(poly.coefficients)
    assert verdict.witness_u <= roots[-1] * 1.01


def test_touching_root_splits_the_modes():
    r = 2.0 - math.sqrt(3.0)
    lags = LagPair.from_ratio(r)
    weak = classify(2, 2, lags, Mode.WEAK)
    strict = classify(2, 2, lags, Mode.STRICT)
    assert weak.kind is VerdictKind.CONSISTENT_WEAK
    assert weak.is_consistent(Mode.WEAK)
    assert strict.kind is VerdictKind.CONSISTENT_WEAK
    assert not strict.is_consistent(Mode.STRICT)
    assert strict.witness_u == pytest.approx(weak.witness_u)
    assert strict.witness_omega == pytest.approx(math.sqrt(2.0 / r), rel=1e-4)


def test_duality_over_random_lags():
    rng = np.random.default_rng(2024)
    pairs = [(float(np.exp(rng.uniform(-1.5, 1.5))), float(np.exp(rng.uniform(-1.5, 1.5)))) for _ in range(20)]
    for n, m in ORDERS:
        for tq, tt in pairs:
            forward = classify(n, m, LagPair(tq, tt))
            backward = classify(m, n, LagPair(tt, tq))
            assert forward.kind is backward.kind, (n, m, tq, tt)


@pytest.mark.parametrize("c", [1e-12, 1.0, 1e3])
def test_verdict_depends_only_on_the_ratio(c):
    base = LagPair(1.0, 0.8)
    for n, m in ORDERS:
        ref = classify(n, m, base)
        scaled = classify(n, m, base.scaled(c))
        assert scaled.kind is ref.kind
        if ref.witness_u is not None:
            assert scaled.witness_u == pytest.approx(ref.witness_u, rel=1e-9)
            assert scaled.witness_omega == pytest.approx(ref.witness_omega / c, rel=1e-9)


# ---------------- Regions ----------------

def test_region_two_two():
    region = admissible_region(2, 2)
    assert len(region.intervals) == 1
    iv = region.intervals[0]
    assert iv.low == pytest.approx(2.0 - math.sqrt(3.0), abs=1e-6)
    assert iv.high == pytest.approx(2.0 + math.sqrt(3.0), abs=1e-6)


def test_region_two_two_kinds_follow_the_mode():
    weak = admissible_region(2, 2, mode=Mode.WEAK).intervals[0]
    strict = admissible_region(2, 2, mode=Mode.STRICT).intervals[0]
    assert weak.low_kind is BoundaryKind.CLOSED and weak.high_kind is BoundaryKind.CLOSED
    assert strict.low_kind is BoundaryKind.OPEN and strict.high_kind is BoundaryKind.OPEN
    assert not admissible_region(2, 2, mode=Mode.STRICT).contains(2.0 - math.sqrt(3.0))


def test_region_two_three_and_its_dual():
    region = admissible_region(2, 3)
    assert len(region.intervals) == 1
    iv = region.intervals[0]
    assert iv.low == pytest.approx(0.28441, abs=5e-4)
    assert iv.high == pytest.approx(1.4902, abs=5e-4)

    dual = admissible_region(3, 2)
    assert len(dual.intervals) == 1
    flipped = region.reciprocal().intervals[0]
    assert dual.intervals[0].low == pytest.approx(flipped.low, abs=5e-4)
    assert dual.intervals[0].high == pytest.approx(flipped.high, abs=5e-4)


@pytest.mark.parametrize("n,m", [(2, 1), (2, 2), (3, 3), (3, 4), (4, 4)])
def test_region_duality(n, m):
    a = admissible_region(n, m).reciprocal()
    b = admissible_region(m, n)
    assert len(a.intervals) == len(b.intervals)
    for x, y in zip(a.intervals, b.intervals):
        assert x.low == pytest.approx(y.low, rel=1e-5, abs=1e-9)
        if math.isinf(y.high):
            assert math.isinf(x.high)
        else:
            assert x.high == pytest.approx(y.high, rel=1e-5)


def test_region_two_one_is_half_line():
    region = admissible_region(2, 1)
    iv = region.intervals[0]
    assert iv.low == pytest.approx(0.5, abs=1e-6)
    assert iv.low_kind is BoundaryKind.CLOSED
    assert math.isinf(iv.high) and iv.high_kind is BoundaryKind.UNBOUNDED
    assert region.contains(0.51) and not region.contains(0.4)


def test_region_one_two_is_closed_on_the_right():
    iv = admissible_region(1, 2).intervals[0]
    assert iv.low == 0.0 and iv.low_kind is BoundaryKind.OPEN
    assert iv.high == pytest.approx(2.0, abs=1e-6)
    assert iv.high_kind is BoundaryKind.CLOSED


@pytest.mark.parametrize("n,m", [(0, 2), (0, 3), (3, 1)])
def test_empty_regions(n, m):
    assert admissible_region(n, m).is_empty


def test_three_four_leading_coefficient_bound():
    bounds = leading_coefficient_bounds(3, 4)
    assert bounds == pytest.approx([4.0 / 3.0], abs=1e-4)
    assert leading_coefficient_bounds(4, 3) == pytest.approx([3.0 / 4.0], abs=1e-4)
    region = admissible_region(3, 4)
    assert region.contains(1.0)
    # the leading-coefficient condition is necessary
    assert all(iv.high <= 4.0 / 3.0 + 1e-4 for iv in region.intervals)


def test_region_argument_checks():
    with pytest.raises(ValueError):
        admissible_region(2, 2, r_max=5.0)
    with pytest.raises(ValueError):
        admissible_region(2, 2, tol=1e-2)
    with pytest.raises(ValueError):
        admissible_region(2, 2, tol=0.0)


def test_verdict_sweep_covers_the_scan():
    sweep = verdict_sweep(2, 2, r_max=10.0, points=64)
    assert len(sweep) == 64
    assert sweep[0][0] == pytest.approx(0.1)
    assert sweep[-1][0] == pytest.approx(10.0)
    kinds = {k for _, k in sweep}
    assert VerdictKind.INCONSISTENT in kinds and VerdictKind.CONSISTENT_STRICT in kinds


def test_region_text_formats_unions():
    ivs = [
        Interval(0.0, 0.5, BoundaryKind.OPEN, BoundaryKind.CLOSED),
        Interval(2.0, math.inf, BoundaryKind.CLOSED, BoundaryKind.UNBOUNDED),
    ]
    assert region_text(ivs) == "(0, 0.5] U [2, inf)"
    assert region_text([]) == "(empty)"


def test_interval_reciprocal_maps_ends():
    iv = Interval(0.0, 2.0, BoundaryKind.OPEN, BoundaryKind.CLOSED)
    flipped = iv.reciprocal()
    assert flipped.low == pytest.approx(0.5)
    assert flipped.low_kind is BoundaryKind.CLOSED
    assert math.isinf(flipped.high) and flipped.high_kind is BoundaryKind.UNBOUNDED


# ---------------- Published forms ----------------

def test_known_regions():
    assert known_region_oracle(1, 1).contains(1e-6)
    assert known_region_oracle(1, 1).contains(1e6)
    one_two = known_region_oracle(1, 2).intervals[0]
    assert one_two.high == 2.0 and one_two.high_kind is BoundaryKind.CLOSED
    assert known_region_oracle(3, 1).is_empty
    assert known_region_oracle(3, 3) is None
    assert known_region_oracle(4, 4) is None


@pytest.mark.parametrize("n,m", [(2, 1), (1, 2), (2, 2), (2, 3), (3, 2)])
def test_computed_boundaries_match_known_ones(n, m):
    computed = admissible_region(n, m)
    known = known_region_oracle(n, m)
    assert len(computed.intervals) == len(known.intervals)
    for c, k in zip(computed.intervals, known.intervals):
        assert c.low == pytest.approx(k.low, abs=5e-4)
        if math.isinf(k.high):
            assert math.isinf(c.high)
        else:
            assert c.high == pytest.approx(k.high, abs=5e-4)


@pytest.mark.parametrize("n,m", [(1, 1), (2, 0), (1, 2), (0, 3), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4)])
@pytest.mark.parametrize("r", [0.3, 1.0, 1.7])
def test_brackets_are_positive_multiples(n, m, r):
    bracket = published_bracket(n, m, r)
    c = build_positivity_polynomial(n, m, r).coefficients
    scale = bracket[0] / c[0]
    assert scale > 0
    padded = list(c) + [0.0] * (len(bracket) - len(c))
    assert [scale * x for x in padded] == pytest.approx(list(bracket), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("n,m", [(3, 3), (3, 4), (4, 4)])
@pytest.mark.parametrize("r", [0.5, 2.0])
def test_rounded_brackets_replicate(n, m, r):
    bracket = published_bracket(n, m, r)
    scaled = build_positivity_polynomial(n, m, r).scaled(BRACKET_SCALE[(n, m)])
    rel = 2e-3 if (n, m) == (3, 3) else 1e-3
    for got, want in zip(scaled, bracket):
        assert got == pytest.approx(want, rel=rel, abs=1e-3)


def test_four_four_normalization_constant():
    assert published_bracket(4, 4, 1.0)[0] == pytest.approx(1552.03)
    assert published_bracket(0, 0, 1.0) is None


# ---------------- Grid ----------------

def test_grid_reproduces_the_consistent_pairs(weak_grid):
    assert set(weak_grid.consistent_pairs()) == CONSISTENT_PAIRS


def test_grid_categories(weak_grid):
    for pair in ALWAYS_CONSISTENT:
        assert weak_grid.cell(*pair).category is GridClass.ALWAYS
    for pair in NEVER_CONSISTENT:
        cell = weak_grid.cell(*pair)
        assert cell.category is GridClass.NEVER
        assert cell.witness_omega is not None and cell.witness_omega > 0
    for pair in [(2, 2), (3, 3), (3, 4), (4, 3), (4, 4)]:
        cell = weak_grid.cell(*pair)
        assert cell.category is GridClass.CONDITIONAL
        assert cell.region.contains(1.0)


def test_grid_flags_the_unlisted_pair(weak_grid):
    assert weak_grid.cell(1, 1).note == UNLISTED_PAIR_NOTE
    assert all(c.note is None for c in weak_grid.cells if (c.n, c.m) != (1, 1))
    with pytest.raises(KeyError):
        weak_grid.cell(5, 5)
