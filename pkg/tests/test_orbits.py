from fractions import Fraction as F

import pytest
from gmpy2 import mpq

from pcmap import (DomainError, ResourceBudgetError, affine_map, detect_cycle, find_periodic_affine,
                   iterate_orbit, iterate_points, itinerary_word)
from pcmap.orbits import orbit_csv

from conftest import rational_rotation


def test_f2_orbit_closed_form(f2):
    # x_k = 1/2 - 2^-(k+1) for k >= 1
    assert iterate_points(f2, 0, 4) == [0, mpq(1, 4), mpq(3, 8), mpq(7, 16)]
    pts = iterate_points(f2, 0, 60)
    assert all(pts[k] == F(1, 2) - F(1, 2 ** (k + 1)) for k in range(1, 60))


def test_fixed_point_orbit(f1):
    assert iterate_points(f1, "1/4", 3) == [mpq(1, 4)] * 3


def test_single_point_orbit(f1):
    orbit = iterate_orbit(f1, "2/3", 1)
    assert orbit.points == (mpq(2, 3),) or list(orbit.points) == [mpq(2, 3)]
    assert itinerary_word(orbit) == "2"


def test_itinerary(f1, f2):
    assert itinerary_word(iterate_orbit(f2, 0, 4)) == "1111"
    assert itinerary_word(iterate_orbit(f1, "3/4", 3)) == "222"
    assert itinerary_word(iterate_orbit(f1, 0, 1)) == "1"


def test_orbit_outside_domain(f1):
    with pytest.raises(DomainError):
        iterate_points(f1, "-1/8", 3)


def test_bit_budget_names_iterate():
    m = affine_map(["1/2"], [("1/3", "1/3"), ("1/3", "1/3")])
    with pytest.raises(ResourceBudgetError, match="iterate"):
        iterate_points(m, "1/7", 200, bit_budget=64)


def test_orbit_csv(f2):
    text = orbit_csv(iterate_orbit(f2, 0, 3))
    assert text == "k,x_k,piece_k\n0,0,1\n1,1/4,1\n2,3/8,1\n"


def test_detect_cycle(f1, f2):
    assert detect_cycle(f1, 0, 200) is None
    rec = detect_cycle(f1, "3/4", 10)
    assert (rec.point, rec.period, rec.certified) == (mpq(3, 4), 1, True)
    assert detect_cycle(f2, 0, 100, tol=0) is None


def test_detect_cycle_rotation():
    m = rational_rotation(F(2, 5))
    rec = detect_cycle(m, "1/10", 50)
    assert rec.period == 5 and rec.certified


def test_detect_cycle_float_not_certified(golden):
    rec = detect_cycle(golden, 0.0, 50, tol=0.02)
    assert rec is not None and not rec.certified


def test_find_periodic(f1, f2):
    recs = find_periodic_affine(f1, 3)
    assert [(r.point, r.period, r.certified) for r in recs] == [(mpq(1, 4), 1, True), (mpq(3, 4), 1, True)]
    assert find_periodic_affine(f2, 10) == []


def test_find_periodic_rational_rotation():
    recs = find_periodic_affine(rational_rotation(F(13, 21)), 21)
    assert any(r.period == 21 for r in recs)
    assert all(r.period == 21 for r in recs)


def test_find_periodic_period_two():
    # x -> x + 1/2 on [0,1/2), x - 1/2 on [1/2,1]: every point has period 2
    recs = find_periodic_affine(rational_rotation(F(1, 2)), 4)
    assert [r.period for r in recs] == [2]


def test_find_periodic_involution(involution):
    # each flipped piece holds one fixed point and a family of 2-cycles {x, c - x}
    recs = find_periodic_affine(involution, 4)
    assert [(r.point, r.period) for r in recs if r.period == 1] == [(mpq(3, 10), 1), (mpq(4, 5), 1)]
    pairs = [r for r in recs if r.period == 2]
    assert len(pairs) == 2
    assert pairs[0].point < mpq(3, 10) and mpq(3, 5) <= pairs[1].point < mpq(4, 5)
    assert all(r.period <= 2 for r in recs)


def test_find_periodic_needs_exact_affine(golden, sqrt_golden):
    for m in (golden, sqrt_golden):
        with pytest.raises(ValueError):
            find_periodic_affine(m, 2)


def test_find_periodic_word_budget():
    with pytest.raises(ResourceBudgetError, match="examining"):
        find_periodic_affine(rational_rotation(F(13, 21)), 21, max_words=10)
