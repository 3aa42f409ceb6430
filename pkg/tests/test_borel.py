import numpy as np
import pytest

from gdarb.borel import EMPTY, BorelSet, SVCSet, distance_to_set, svc_measure, svc_set


def removed_mass_oracle(depth):
    # enumerate the removal schedule: stage k removes 2^(k-1) gaps of 4^-k
    return sum(2 ** (k - 1) * 4.0**-k for k in range(1, depth + 1))


def test_svc_measure_depth1():
    assert svc_measure(1) == 0.75


def test_svc_measure_depth2_oracle():
    assert svc_measure(2) == pytest.approx(1.0 - removed_mass_oracle(2), abs=0)
    assert svc_measure(2) == 0.625


def test_svc_measure_depth4_exact():
    assert svc_measure(4) == 0.53125


def test_svc_measure_matches_interval_expansion():
    for depth in range(1, 8):
        s = SVCSet(depth)
        total = sum(hi - lo for lo, hi in s.to_intervals())
        assert total == pytest.approx(s.measure(), abs=1e-15)


def test_svc_measure_monotone_and_above_half():
    vals = [svc_measure(n) for n in range(1, 25)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 0.5 for v in vals)
    # geometric series limit
    assert svc_measure(30) == pytest.approx(0.5, abs=1e-8)


def test_svc_contains_matches_intervals():
    s = SVCSet(3)
    xs = np.linspace(-0.1, 1.1, 4001)
    ivs = s.to_intervals()
    brute = np.array([any(lo <= x <= hi for lo, hi in ivs) for x in xs])
    assert np.array_equal(s.contains(xs), brute)


def test_svc_distance_first_gap_midpoint():
    # first removed gap has length 1/4, centered at 1/2
    s = svc_set(1)
    assert distance_to_set(0.5, s) == pytest.approx(0.125, abs=1e-15)


def test_svc_distance_outside():
    s = svc_set(4)
    assert distance_to_set(-0.3, s) == pytest.approx(0.3, abs=1e-15)
    assert distance_to_set(1.2, s) == pytest.approx(0.2, abs=1e-15)


def test_svc_distance_grid_oracle():
    s = SVCSet(2)
    ivs = s.to_intervals()
    rng = np.random.default_rng(7)
    for x in rng.uniform(-0.2, 1.2, 200):
        brute = min(
            0.0 if lo <= x <= hi else min(abs(x - lo), abs(x - hi)) for lo, hi in ivs
        )
        assert s.distance(x) == pytest.approx(brute, abs=1e-14)


def test_distance_zero_iff_member():
    s = svc_set(3)
    rng = np.random.default_rng(11)
    for x in rng.uniform(0.0, 1.0, 500):
        member = bool(s.contains(x))
        assert (s.distance(x) == 0.0) == member


def test_svc_depth_validation():
    with pytest.raises(ValueError):
        svc_set(0)
    with pytest.raises(ValueError):
        svc_set(31)
    with pytest.raises(ValueError):
        SVCSet(25).to_intervals()


def test_borel_make_normalizes():
    s = BorelSet.make([(0.0, 1.0), (0.5, 2.0)], points=[0.3, 3.0])
    assert s.intervals == ((0.0, 2.0),)
    assert s.points == (3.0,)
    assert s.lebesgue() == 2.0


def test_borel_membership_and_exclusions():
    s = BorelSet.make([(0.0, 1.0)], points=[2.0]).without_points([0.5, 2.0])
    assert 0.25 in s
    assert 0.5 not in s
    assert 2.0 not in s
    assert s.lebesgue() == 1.0  # exclusions never change measure


def test_borel_union_intersect_complement():
    a = BorelSet.make([(0.0, 1.0)])
    b = BorelSet.make([(0.5, 2.0)], points=[5.0])
    u = a.union(b)
    assert u.lebesgue() == 2.0
    assert 5.0 in u
    i = a.intersect(b)
    assert i.intervals == ((0.5, 1.0),)
    c = a.complement_within(-1.0, 2.0)
    assert c.intervals == ((-1.0, 0.0), (1.0, 2.0))


def test_borel_difference():
    a = BorelSet.make([(0.0, 2.0)])
    b = BorelSet.make([(0.5, 1.0)])
    d = a.difference(b)
    assert d.lebesgue() == pytest.approx(1.5, abs=1e-15)
    assert 0.75 not in d or d.lebesgue() != 1.5  # interior of b removed
    assert 0.25 in d and 1.5 in d


def test_borel_svc_algebra():
    f = svc_set(2)
    window = BorelSet.make([(0.0, 1.0)])
    assert f.intersect(window).lebesgue() == pytest.approx(svc_measure(2), abs=1e-15)
    comp = f.complement_within(0.0, 1.0)
    assert comp.lebesgue() == pytest.approx(1.0 - svc_measure(2), abs=1e-15)
    assert f.union(EMPTY).lebesgue() == pytest.approx(svc_measure(2), abs=1e-15)


def test_empty_set():
    assert EMPTY.is_empty
    assert EMPTY.lebesgue() == 0.0
    with pytest.raises(ValueError):
        EMPTY.distance(0.0)
