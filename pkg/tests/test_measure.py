from fractions import Fraction as F

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from pcmap import (BasePointError, DomainError, EmpiricalMeasure, MeasureMismatchError,
                   TestFunction, affine_map, cdf_eval, cdf_left, choose_base_point,
                   convergence_diag, empirical_measure, invariance_bound, invariance_residual,
                   largest_atom, max_local_mass, wasserstein1)
from pcmap.measure import cdf_grid_csv, cdf_many, samples_csv

ALPHA = (5 ** 0.5 - 1) / 2


def point_mass(x, n=1):
    return EmpiricalMeasure.from_points([mpq(x)] * n, mpq(x), "exact")


def test_choose_base_point_skips_breakpoint(f1, f2):
    assert choose_base_point(f1, "1/2", max_skip=4, depth=64, return_skip=True) == (mpq(5, 8), 1)
    assert choose_base_point(f2, "1/2", return_skip=True, depth=200) == (mpq(1, 4), 1)


def test_choose_base_point_golden(golden):
    # 0 is itself a breakpoint, so the first admissible tail starts at f(0) = alpha
    p, skip = choose_base_point(golden, 0.0, depth=10_000, tol=1e-12, return_skip=True)
    assert (p, skip) == (ALPHA, 1)
    p, skip = choose_base_point(golden, 0.1, depth=10_000, tol=1e-12, return_skip=True)
    assert (p, skip) == (0.1, 0)


def test_choose_base_point_fails_on_fixed_breakpoint():
    m = affine_map(["1/2"], [("1/2", "1/4"), (0, "1/2")])
    with pytest.raises(BasePointError):
        choose_base_point(m, "1/2", max_skip=3, depth=10)


def test_samples_avoid_critical_set_after_base_point(f1):
    p = choose_base_point(f1, "1/2", depth=300)
    mu = empirical_measure(f1, p, 300)
    assert not set(mu.samples) & set(f1.partition)


def test_empirical_measure_samples(f1, f2):
    assert list(empirical_measure(f2, 0, 3).samples) == [0, mpq(1, 4), mpq(3, 8)]
    assert list(empirical_measure(f1, "3/4", 5).samples) == [mpq(3, 4)] * 5
    mu = empirical_measure(f1, "1/3", 1)
    assert cdf_left(mu, "1/3") == 0 and cdf_eval(mu, "1/3") == 1


def test_cdf_examples(f1, f2):
    mu = empirical_measure(f1, "3/4", 7)
    assert cdf_eval(mu, "1/2") == 0
    assert cdf_eval(mu, "3/4") == 1
    assert cdf_eval(empirical_measure(f2, 0, 4), "3/10") == mpq(1, 2)
    with pytest.raises(DomainError):
        cdf_eval(mu, "5/4")


def test_wasserstein_examples(f2):
    mu = empirical_measure(f2, 0, 50)
    assert wasserstein1(mu, mu) == 0
    assert wasserstein1(point_mass("1/5"), point_mass("7/10")) == mpq(1, 2)
    assert wasserstein1(empirical_measure(f2, 0, 2), point_mass(0)) == mpq(1, 8)


def test_wasserstein_float_matches_exact(f2):
    a = empirical_measure(f2, 0, 30)
    b = empirical_measure(f2, "1/3", 17)
    fa = EmpiricalMeasure.from_points([float(x) for x in a.samples], 0.0, "float")
    fb = EmpiricalMeasure.from_points([float(x) for x in b.samples], 1 / 3, "float")
    assert wasserstein1(fa, fb) == pytest.approx(float(wasserstein1(a, b)), rel=1e-12)


def test_invariance_examples(f1, f2):
    phi = TestFunction.polynomial(["0", "1"], "exact")
    assert invariance_residual(f1, empirical_measure(f1, "3/4", 9), phi) == 0
    assert invariance_residual(f2, empirical_measure(f2, 0, 4), phi) == mpq(15, 128)
    const = TestFunction.polynomial(["2/3"], "exact")
    assert invariance_residual(f2, empirical_measure(f2, "1/3", 40), const) == 0


def test_invariance_mismatch(f1, f2):
    mu = empirical_measure(f2, "1/3", 10)
    with pytest.raises(MeasureMismatchError):
        invariance_residual(f1, mu, TestFunction.polynomial([0, 1], "exact"))


def test_invariance_piecewise_linear(golden):
    phi = TestFunction.piecewise_linear([(0, 0), (0.5, 1), (1, 0)])
    mu = empirical_measure(golden, 0.1, 1000)
    assert invariance_residual(golden, mu, phi) <= invariance_bound(phi, 1000)


def test_test_function_bound_covers_interior_peak():
    phi = TestFunction.polynomial([0, 4, -4])  # peak 1 at x = 1/2
    assert phi.bound >= 1.0
    assert phi.bound == pytest.approx(1.0)


def test_max_local_mass_examples(golden):
    assert max_local_mass(point_mass("1/4", 12), "1/100") == 1
    two = EmpiricalMeasure.from_points([mpq(0), mpq(1)], mpq(0), "exact")
    assert max_local_mass(two, "1/10") == mpq(1, 2)
    mu = empirical_measure(golden, 0.1, 10 ** 5)
    assert 0.018 <= max_local_mass(mu, 0.01) <= 0.022
    assert largest_atom(point_mass("1/4", 5)) == 1


def test_convergence_examples(f1, f2, golden):
    assert convergence_diag(f1, "3/4", [10, 100]) == [(100, 0)]
    diag = convergence_diag(f2, 0, [100, 1000, 10_000])
    values = [w for _, w in diag]
    assert values[0] > values[1] and values[1] < mpq(1, 100)
    diag = convergence_diag(golden, ALPHA, [1000, 10_000, 100_000])
    assert diag[-1][1] < 1e-3


def test_convergence_schedule_validation(f1):
    with pytest.raises(ValueError):
        convergence_diag(f1, 0, [10, 10])


def test_csv_exports(f2):
    mu = empirical_measure(f2, 0, 3)
    assert samples_csv(mu) == "x\n0\n1/4\n3/8\n"
    rows = cdf_grid_csv(mu, 4).splitlines()
    assert rows == ["x,cdf", "0.0,0.3333333333333333", "0.25,0.6666666666666666", "0.5,1.0", "0.75,1.0", "1.0,1.0"]


# property suites

_fracs = st.fractions(min_value=0, max_value=1, max_denominator=64)


def _measure(points):
    return EmpiricalMeasure.from_points([mpq(p.numerator, p.denominator) for p in points], mpq(0), "exact")


_measures = st.lists(_fracs, min_size=1, max_size=12).map(_measure)


@settings(max_examples=200, deadline=None)
@given(_measures, _measures, _measures)
def test_wasserstein_metric(a, b, c):
    ab, bc, ac = wasserstein1(a, b), wasserstein1(b, c), wasserstein1(a, c)
    assert ab == wasserstein1(b, a)
    assert ab >= 0
    assert ac <= ab + bc
    assert wasserstein1(a, a) == 0


@settings(max_examples=200, deadline=None)
@given(_measures, _fracs, _fracs)
def test_cdf_counting(mu, a, b):
    a, b = sorted((a, b))
    fa, fb = cdf_eval(mu, a), cdf_eval(mu, b)
    assert fa <= fb
    count = sum(1 for s in mu.samples if a < s <= b)
    assert fb - fa == mpq(count, mu.n)
    assert cdf_eval(mu, 1) == 1
    assert (fa * mu.n).denominator == 1


def test_cdf_many_matches_cdf_eval(golden):
    mu = empirical_measure(golden, 0.1, 500)
    xs = np.linspace(0, 1, 101)
    assert list(cdf_many(mu, xs)) == [cdf_eval(mu, float(x)) for x in xs]


_TELESCOPE_MAPS = [
    (["1/2"], [("1/2", "1/8"), ("1/2", "3/8")]),
    (["1/2"], [("1/2", "1/4"), ("1/2", "0")]),
    (["2/5"], [(1, "3/5"), (1, "-2/5")]),
    (["1/3", "2/3"], [("-1", "1/3"), ("1/2", "1/2"), ("1", "-2/3")]),
]


def _fraction_orbit(interior, branches, p, n):
    cuts = [F(v) for v in interior]
    coeffs = [(F(a), F(b)) for a, b in branches]
    pts = [F(p)]
    for _ in range(n):
        x = pts[-1]
        a, b = coeffs[sum(1 for c in cuts if x >= c)]
        pts.append(a * x + b)
    return pts


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.integers(1, 300), st.lists(st.integers(-5, 5), min_size=1, max_size=5),
       st.fractions(min_value=0, max_value=1, max_denominator=50))
def test_telescoping_exact(which, n, coeffs, p):
    interior, branches = _TELESCOPE_MAPS[which]
    m = affine_map(interior, branches)
    phi = TestFunction.polynomial(coeffs, "exact")
    res = invariance_residual(m, empirical_measure(m, p, n), phi)
    pts = _fraction_orbit(interior, branches, p, n)
    poly = lambda x: sum(c * x ** k for k, c in enumerate(coeffs))
    assert F(str(res)) == abs(poly(pts[-1]) - poly(pts[0])) / n
    assert res <= invariance_bound(phi, n)
