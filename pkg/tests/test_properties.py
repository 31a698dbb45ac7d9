import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from levypri import cli
from levypri.criteria import Status, evaluate_J, evaluate_L
from levypri.ladder import RenewalConfig, RenewalFunction, SubordinatorSpec, convolution_square, renewal_function, vigon_upward_tail
from levypri.measures import (
    MINUS, PLUS, FiniteActivity, LevyTriplet, PowerLawTails, TabulatedTails, measure_from_dict,
    spectrally_positive,
)
from levypri.simulate import SimConfig, estimate_hit_functionals, estimate_pri_existence, simulate_path

SLOW = settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])

exponent = st.floats(0.05, 1.95)
positive = st.floats(0.1, 5.0)


@given(exponent, exponent, positive, positive, st.lists(st.floats(1e-6, 0.999), min_size=2, max_size=20))
def test_power_law_tail_nonincreasing(a, b, cm, cp, xs):
    m = PowerLawTails(a, b, cm, cp)
    xs = np.sort(np.array(xs))
    for side in (PLUS, MINUS):
        assert np.all(np.diff(m.tail(side, xs)) <= 1e-12)


@given(st.lists(st.floats(0.01, 3.0), min_size=3, max_size=12))
def test_tabulated_tail_nonincreasing(steps):
    grid = np.geomspace(1e-3, 0.9, len(steps))
    vals = np.cumsum(steps[::-1])[::-1]
    m = TabulatedTails(tuple(grid), tuple(vals), tuple(vals))
    xs = np.geomspace(1e-4, 0.95, 50)
    assert np.all(np.diff(m.tail(PLUS, xs)) <= 1e-12)
    assert measure_from_dict(m.to_dict()).to_dict() == m.to_dict()


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.05, 1.95))
def test_J_convergent_implies_L_convergent(a, b):
    t = LevyTriplet(0.0, 0.0, PowerLawTails(a, b))
    j = evaluate_J(t)
    if j.status is Status.CONVERGENT:
        assert evaluate_L(t).status is Status.CONVERGENT
    assert np.all(j.band_masses >= 0) and np.all(np.diff(j.partial_sums) >= 0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.1, 3.0), st.floats(0.05, 0.4), st.floats(0.0, 1.0))
def test_solved_renewal_nondecreasing(drift, rate, low, kill):
    s = SubordinatorSpec(drift, spectrally_positive(FiniteActivity(rate, "uniform", {"low": low, "high": low + 0.5})),
                         kill)
    U = renewal_function(s, np.linspace(0.05, 1.0, 20), RenewalConfig("renewal_solve", cells=400))
    assert U.values[0] >= U.u0 - 1e-12
    assert np.all(np.diff(U.values) >= -1e-12)


@given(st.lists(st.floats(0.0, 2.0), min_size=5, max_size=30), st.floats(0.1, 1.0))
def test_convolution_square_bracket(incs, y):
    grid = np.linspace(1.0 / len(incs), 1.0, len(incs))
    U = RenewalFunction(grid, np.cumsum(incs) + 1e-3, "random")
    fine = RenewalFunction(np.linspace(1e-3, 1.0, 2000), U(np.linspace(1e-3, 1.0, 2000)), "fine")
    val = convolution_square(fine, y, rtol=1e-3)
    assert fine(y / 2) ** 2 * (1 - 1e-3) <= val <= fine(y) ** 2 * (1 + 1e-3)


@given(st.floats(1.05, 1.95), st.floats(0.05, 1.95), st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_vigon_tail_nonincreasing(a, b, x1, x2):
    grid = np.linspace(1e-3, 1.0, 400)
    U = RenewalFunction(grid, grid ** (a - 1), "stable-like")
    lo, hi = sorted((x1, x2))
    m = PowerLawTails(a, b)
    assert vigon_upward_tail(m, U, lo) >= vigon_upward_tail(m, U, hi) - 1e-9


json_scalars = st.one_of(st.integers(-5, 5), st.floats(-5, 5, allow_nan=False), st.booleans(), st.text(max_size=3))


@given(st.dictionaries(st.text(min_size=1, max_size=4), json_scalars, max_size=6))
def test_config_hash_ignores_key_order_and_int_float(d):
    flipped = dict(reversed(list(d.items())))
    floated = {k: (float(v) if isinstance(v, int) and not isinstance(v, bool) else v) for k, v in flipped.items()}
    assert cli.config_hash(d) == cli.config_hash(floated)


@SLOW
@given(st.integers(0, 2**63 - 1), st.integers(0, 10**6))
def test_path_determinism(seed, idx):
    t = LevyTriplet(0.2, 0.7, PowerLawTails(1.5, 0.5, 0.3, 0.3))
    cfg = SimConfig(dt=0.05, horizon=1.0, seed=seed)
    assert np.array_equal(simulate_path(t, cfg, idx).values, simulate_path(t, cfg, idx).values)


@SLOW
@given(st.integers(0, 1000), st.floats(-0.5, 1.5), st.floats(0.0, 1.5))
def test_dyadic_monotone_and_bound(seed, gamma, sigma):
    t = LevyTriplet(gamma, sigma, PowerLawTails(1.5, 0.5, 0.2, 0.2))
    cfg = SimConfig(dt=0.01, horizon=2.0, n_paths=8, seed=seed, hit_tolerance=1e-4)
    est = estimate_pri_existence(t, cfg, [1, 2, 3, 4])
    assert est.monotone_violations == 0
    assert np.all(np.diff(est.finite_fraction) <= 0)
    for r in estimate_hit_functionals(t, cfg, [0.5, 0.05]):
        assert 0 <= r.p_hat <= r.one_minus_laplace <= 1
