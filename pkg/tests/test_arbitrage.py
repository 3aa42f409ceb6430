import numpy as np
import pytest

from gdarb import catalog as cat
from gdarb.arbitrage import (
    FeedbackStrategy,
    build_nu,
    build_theta,
    build_theta_bar,
    check_strategy_conditions,
    market_verdicts,
)
from gdarb.borel import BorelSet, svc_measure
from gdarb.measures import integrate
from gdarb.model import to_natural_scale


def nu_matches(built, expected, lo=-10.0, hi=10.0, tol=1e-10):
    if sorted(built.atoms) != sorted(expected.atoms):
        if len(built.atoms) != len(expected.atoms):
            return False
        for (a1, m1), (a2, m2) in zip(sorted(built.atoms), sorted(expected.atoms)):
            if a1 != a2 or abs(m1 - m2) > tol:
                return False
    xs = np.linspace(lo, hi, 1000)
    d1 = np.array([_dens(built, x) for x in xs])
    d2 = np.array([_dens(expected, x) for x in xs])
    return bool(np.all(np.abs(d1 - d2) <= tol))


def _dens(nu, x):
    return float(np.atleast_1d(nu.density_at(x))[0])


def test_nu_reflected_atom():
    # r * m1 = 0.2 leaves an atom of mass 0.3 at the boundary image
    model = cat.reflected_model(mu=0.0, sigma=0.5, m1=1.0, u0=0.1, r=0.2)
    bundle = build_nu(model)
    assert bundle.nu.atoms == ((0.0, pytest.approx(0.3, abs=1e-14)),)
    assert 0.0 in bundle.n_plus


def test_nu_sticky_atom():
    model = cat.sticky_model(xi=2.0, rho=3.0, x0=0.0, r=0.05)
    bundle = build_nu(model)
    assert len(bundle.nu.atoms) == 1
    loc, mass = bundle.nu.atoms[0]
    assert loc == 2.0
    assert mass == pytest.approx(-0.3, abs=1e-14)
    assert 2.0 in bundle.n_minus
    assert 2.0 not in bundle.n_plus


def test_nu_skew_atom():
    model = cat.skew_model(kappa=0.75, x0=0.0, r=0.3)
    bundle = build_nu(model)
    assert len(bundle.nu.atoms) == 1
    loc, mass = bundle.nu.atoms[0]
    assert loc == 0.0
    assert mass == pytest.approx(4.0 / 3.0, abs=1e-12)


def test_nu_absorbing_atom():
    model = cat.es_model(b=1.5, sigma=0.5, mu=0.0, x0=1.8, r=0.2)
    bundle = build_nu(model)
    assert len(bundle.nu.atoms) == 1
    loc, mass = bundle.nu.atoms[0]
    assert loc == 0.0
    assert mass == pytest.approx(-0.3, abs=1e-14)


def test_nu_fat_cantor_density():
    model = cat.fat_cantor_model(depth=4, u0=0.5, r=0.1)
    bundle = build_nu(model)
    assert bundle.nu.atoms == ()
    expected = cat.fat_cantor_expected_nu(depth=4, r=0.1)
    assert nu_matches(bundle.nu, expected, lo=-1.0, hi=2.0)


def test_nu_zero_for_brownian():
    model = cat.sticky_model(xi=0.5, rho=0.0, x0=0.0, r=0.0)
    bundle = build_nu(model)
    assert bundle.nu.is_zero
    theta = build_theta(bundle)
    assert theta.is_zero


@pytest.mark.parametrize("entry", cat.catalog(), ids=lambda e: e.name)
def test_expected_nu_regression(entry):
    rng = np.random.default_rng(23)
    for _ in range(20):
        params = entry.sample_params(rng)
        model = entry.build(**params)
        bundle = build_nu(model)
        expected = entry.expected_nu(**params)
        assert nu_matches(bundle.nu, expected), params
        verdicts = market_verdicts(model, bundle)
        assert verdicts.nip == entry.expected_nip(**params), params


@pytest.mark.parametrize("entry", cat.catalog(), ids=lambda e: e.name)
def test_nu_concentrated_on_zero_set(entry):
    model = entry.model()
    bundle = build_nu(model)
    window = BorelSet.make([bundle.window])
    off = window.difference(bundle.n_qprime0)
    pos_mass = abs(integrate(bundle.nu, None, off))
    assert pos_mass <= 1e-10


@pytest.mark.parametrize("entry", cat.catalog(), ids=lambda e: e.name)
def test_nu_atoms_affine_in_rate(entry):
    masses = {}
    for r in (0.0, 1.0, 2.0):
        params = entry.params(r=r)
        bundle = build_nu(entry.build(**params))
        masses[r] = dict(bundle.nu.atoms)
    locs = set().union(*[m.keys() for m in masses.values()])
    for a in locs:
        v0 = masses[0.0].get(a, 0.0)
        v1 = masses[1.0].get(a, 0.0)
        v2 = masses[2.0].get(a, 0.0)
        assert abs((v2 - v1) - (v1 - v0)) <= 1e-12


def test_verdict_boundary_reflected():
    # the no-profit verdict flips exactly on the curve r * m1 = 1/2
    for r in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0):
        for m1 in (0.0, 0.2, 0.5 / r, 1.0 / r, 2.0):
            model = cat.reflected_model(mu=0.0, sigma=0.5, m1=m1, u0=0.1, r=r)
            bundle = build_nu(model)
            verdicts = market_verdicts(model, bundle)
            assert verdicts.nip == (r * m1 == 0.5), (r, m1)


def test_verdicts_reflected_instantaneous_zero_rate():
    model = cat.reflected_model(mu=0.0, sigma=0.5, m1=0.0, u0=0.1, r=0.0)
    bundle = build_nu(model)
    v = market_verdicts(model, bundle)
    assert not v.nip and not v.qvip_exists and v.rp_holds


def test_verdicts_fat_cantor():
    model = cat.fat_cantor_model(depth=4, u0=0.5, r=0.1)
    bundle = build_nu(model)
    v = market_verdicts(model, bundle)
    assert not v.nip
    assert v.qvip_exists
    assert not v.rp_holds
    assert v.evidence["lambda_qprime_zero"] == pytest.approx(svc_measure(4), abs=1e-15)


def test_verdicts_skew():
    model = cat.skew_model(kappa=0.75, x0=0.0, r=0.3)
    bundle = build_nu(model)
    v = market_verdicts(model, bundle)
    assert not v.nip
    assert not v.qvip_exists
    assert v.rp_holds


def test_theta_sticky():
    model = cat.sticky_model(xi=0.5, rho=2.0, x0=0.0, r=0.1)
    theta = build_theta(build_nu(model))
    assert theta.evaluate(0.5) == -1.0
    assert theta.evaluate(0.4) == 0.0


def test_theta_skew():
    model = cat.skew_model(kappa=0.75, x0=0.0, r=0.1)
    theta = build_theta(build_nu(model))
    assert theta.evaluate(0.0) == +1.0
    assert theta.evaluate(0.1) == 0.0


def test_theta_fat_cantor():
    model = cat.fat_cantor_model(depth=4, u0=0.5, r=0.1)
    bundle = build_nu(model)
    theta = build_theta(bundle)
    theta_bar = build_theta_bar(model, bundle)
    assert theta.evaluate(0.01) == -1.0  # inside F
    assert theta.evaluate(0.5) == 0.0  # central gap
    assert theta_bar.evaluate(0.01) == -1.0
    assert theta_bar.evaluate(0.5) == 0.0
    # theta and theta_bar coincide on a fine grid
    xs = np.linspace(-0.5, 1.5, 2001)
    assert np.array_equal(theta.evaluate(xs), theta_bar.evaluate(xs))


def test_theta_bar_zero_for_atomic_nu():
    model = cat.skew_model(kappa=0.75, x0=0.0, r=0.1)
    bundle = build_nu(model)
    assert build_theta_bar(model, bundle).is_zero


def test_conditions_theta_passes():
    for entry in cat.catalog():
        model = entry.model()
        bundle = build_nu(model)
        if bundle.nu.is_zero:
            continue
        theta = build_theta(bundle)
        report = check_strategy_conditions(model, bundle, theta)
        assert report.condition_i and report.condition_ii, entry.name


def test_condition_i_fails_for_constant_strategy():
    model = cat.skew_model(kappa=0.75, x0=0.0, r=0.1)
    bundle = build_nu(model)
    h_one = FeedbackStrategy(plus_set=BorelSet.make([(-50.0, 50.0)]))
    report = check_strategy_conditions(model, bundle, h_one)
    assert not report.condition_i


def test_condition_ii_fails_for_minus_theta():
    model = cat.sticky_model(xi=0.5, rho=2.0, x0=0.0, r=0.1)
    bundle = build_nu(model)
    theta = build_theta(bundle)
    report = check_strategy_conditions(model, bundle, theta.scaled(-1.0))
    assert report.condition_i
    assert not report.condition_ii


def test_theta_squared_one_on_carrier():
    model = cat.fat_cantor_model(depth=3, u0=0.5, r=0.1)
    bundle = build_nu(model)
    theta = build_theta(bundle)
    rng = np.random.default_rng(5)
    carrier = bundle.nu.carrier
    xs = rng.uniform(0.0, 1.0, 2000)
    inside = carrier.contains(xs)
    vals = theta.evaluate(xs[inside])
    # theta^2 = 1 except on the lambda-null boundary of the positive part
    assert np.all(np.abs(vals) == 1.0)


def test_nip_implies_theta_zero():
    model = cat.reflected_model(mu=0.0, sigma=0.5, m1=2.0, u0=0.1, r=0.25)
    bundle = build_nu(model)
    assert market_verdicts(model, bundle).nip
    assert build_theta(bundle).is_zero


def test_qvip_implies_theta_bar_nonzero():
    model = cat.fat_cantor_model(depth=2, u0=0.5, r=-0.2)
    bundle = build_nu(model)
    assert market_verdicts(model, bundle).qvip_exists
    assert not build_theta_bar(model, bundle).is_zero


def test_strategy_scaling_and_gain():
    s = FeedbackStrategy(plus_set=BorelSet.make(points=[1.0]), gain=2.0)
    assert s.evaluate(1.0) == 2.0
    assert s.scaled(-1.5).evaluate(1.0) == -3.0
    with pytest.raises(ValueError):
        FeedbackStrategy(gain=0.0)
