import math

import numpy as np
import pytest
from scipy import integrate, stats

from levypri.ladder import SubordinatorSpec
from levypri.measures import (
    FiniteActivity, LevyTriplet, OneSidedStable, PowerLawTails, ZeroMeasure, spectrally_negative,
    spectrally_positive,
)
from levypri.simulate import (
    SimConfig, dyadic_inverse, effective_process, estimate_hit_functional, estimate_hit_functionals,
    estimate_pri_existence, first_passage_above, hit_times, overshoot_survival, paths_to_csv, simulate_path,
)

DRIFT = LevyTriplet(1.0, 0.0, ZeroMeasure())
BM = LevyTriplet(0.0, 1.0, ZeroMeasure())


def test_straight_line():
    p = simulate_path(DRIFT, SimConfig(dt=0.01, horizon=2.0), 0)
    assert p.times[0] == 0 and p.values[0] == 0
    assert np.allclose(p.values, p.times)
    assert len(p.jump_log) == 0


def test_determinism_per_path_index():
    t = LevyTriplet(0.0, 1.0, PowerLawTails(1.5, 0.5))
    cfg = SimConfig(dt=0.01, horizon=1.0, seed=11)
    a, b = simulate_path(t, cfg, 3), simulate_path(t, cfg, 3)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.jump_log, b.jump_log)
    assert not np.array_equal(a.values, simulate_path(t, cfg, 4).values)


def test_jumps_are_logged_discontinuities():
    t = LevyTriplet(0.0, 0.5, PowerLawTails(1.5, 0.5))
    p = simulate_path(t, SimConfig(dt=0.01, horizon=1.0, epsilon=0.05), 0)
    assert len(p.jump_log) > 0
    idx = np.searchsorted(p.times, p.jump_log[:, 0])
    assert np.allclose(p.values[idx] - p.left_values[idx], p.jump_log[:, 1])
    assert np.all(np.abs(p.jump_log[:, 1]) > 0.05)


def test_poisson_jump_count():
    t = LevyTriplet(0.0, 0.0, FiniteActivity(2.0, "atom", {"loc": 1.0}))
    cfg = SimConfig(dt=0.1, horizon=100.0)
    counts = np.array([len(simulate_path(t, cfg, i).jump_log) for i in range(50)])
    assert abs(counts.mean() - 200) <= 4 * math.sqrt(200 / 50)


def test_compensated_increment_is_centred():
    t = LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 1.5))
    cfg = SimConfig(epsilon=0.01, dt=1.0, horizon=1.0)
    v = np.array([simulate_path(t, cfg, i).values[-1] for i in range(10_000)])
    assert abs(v.mean()) <= 4 * v.std(ddof=1) / 100


def test_gaussian_substitute_variance():
    t = LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 1.5))
    drop = effective_process(t, SimConfig(epsilon=0.01))
    sub = effective_process(t, SimConfig(epsilon=0.01, small_jump_mode="gaussian_substitute"))
    # ∫_{|x|<=eps} x² Π(dx) = 2 * 1.5/0.5 * eps**0.5 on both sides
    assert drop.sigma == 0 and sub.sigma**2 == pytest.approx(2 * 3 * 0.1)
    assert sub.hit_class == "A"


def test_jump_budget_guard_suggests_epsilon():
    t = LevyTriplet(0.0, 0.0, PowerLawTails(1.9, 1.9))
    with pytest.raises(ValueError, match="try epsilon"):
        simulate_path(t, SimConfig(epsilon=1e-6, horizon=10.0, max_jumps=1000), 0)


def test_first_passage_drift():
    fp = first_passage_above(DRIFT, SimConfig(dt=0.01, horizon=2.0), 0, 0.5)
    assert fp.time == pytest.approx(0.5) and fp.overshoot == 0.0


def test_first_passage_unit_poisson():
    # gamma = 1 cancels the compensator: a pure unit-jump Poisson process
    t = LevyTriplet(1.0, 0.0, spectrally_positive(FiniteActivity(1.0, "atom", {"loc": 1.0})))
    cfg = SimConfig(dt=0.01, horizon=50.0)
    fps = [first_passage_above(t, cfg, i, 0.5) for i in range(1000)]
    T = np.array([f.time for f in fps])
    assert abs(T.mean() - 1.0) <= 4 * T.std(ddof=1) / math.sqrt(len(T))
    assert np.allclose([f.overshoot for f in fps], 0.5)


def test_first_passage_reflection():
    cfg = SimConfig(dt=1e-3, horizon=1.0)
    hit = np.array([math.isfinite(first_passage_above(BM, cfg, i, 1.0).time) for i in range(2000)])
    p = 2 * (1 - stats.norm.cdf(1.0))
    assert abs(hit.mean() - p) <= 4 * math.sqrt(p * (1 - p) / len(hit))


def test_brownian_hitting_laplace():
    cfg = SimConfig(dt=1e-3, horizon=10.0, n_paths=2000, hit_tolerance=1e-4)
    r = estimate_hit_functional(BM, cfg, 0.25)
    assert r.method == "A"
    assert abs(r.one_minus_laplace - (1 - math.exp(-0.25 * math.sqrt(2)))) <= 4 * r.one_minus_laplace_se


def test_hit_tolerance_must_be_small():
    with pytest.raises(ValueError):
        estimate_hit_functional(BM, SimConfig(hit_tolerance=0.01), 0.5)


def test_class_b_hit_equals_first_passage():
    t = LevyTriplet(1.0, 0.0, spectrally_negative(PowerLawTails(1.5, 0.5)))
    cfg = SimConfig(dt=1e-3, horizon=5.0, hit_tolerance=1e-5)
    assert effective_process(t, cfg).hit_class == "B"
    for i in range(50):
        p = simulate_path(t, cfg, i)
        h = hit_times(p, 0.3, "B", cfg.hit_tolerance)
        fp = first_passage_above(t, cfg, i, 0.3)
        if math.isinf(fp.time):
            assert len(h) == 0
        else:
            assert h[0] == pytest.approx(fp.time, abs=1e-12) and fp.overshoot == 0.0
    r = estimate_hit_functional(t, SimConfig(dt=1e-3, horizon=5.0, n_paths=200, hit_tolerance=1e-5), 0.3)
    assert r.p_hat < 0.05


def test_subordinator_skips_levels_class_c():
    # gamma = ∫ x Π(dx) leaves a driftless subordinator
    t = LevyTriplet(2.0, 0.0, spectrally_positive(PowerLawTails(0.5, 0.5)))
    cfg = SimConfig(dt=1e-3, horizon=2.0, n_paths=100, hit_tolerance=1e-6)
    r = estimate_hit_functional(t, cfg, 0.4)
    assert r.method == "C" and r.heuristic
    assert [b["eta"] for b in r.by_tolerance] == [1e-6, 5e-7, 2.5e-7]
    assert all(b["p_hat"] > 0.9 for b in r.by_tolerance)


def test_censored_bound_holds_pathwise():
    t = LevyTriplet(0.0, 1.0, PowerLawTails(1.5, 0.5))
    cfg = SimConfig(dt=1e-3, horizon=2.0, n_paths=200, hit_tolerance=1e-4)
    for r in estimate_hit_functionals(t, cfg, [0.5, 0.1, 0.02]):
        assert r.p_hat <= r.one_minus_laplace


def test_dyadic_drift_identity_speed():
    lad = dyadic_inverse(DRIFT, SimConfig(dt=0.01, horizon=2.0), 0, 4)
    assert np.allclose(lad.stopping_times, np.arange(1, 17) / 16)
    assert lad.K == pytest.approx(1.0)


def test_dyadic_negative_drift():
    lad = dyadic_inverse(LevyTriplet(-1.0, 0.0, ZeroMeasure()), SimConfig(dt=0.01, horizon=2.0), 0, 3)
    assert np.all(np.isinf(lad.stopping_times)) and math.isinf(lad.K)


def test_dyadic_budget_truncates():
    lad = dyadic_inverse(DRIFT, SimConfig(dt=0.01, horizon=2.0, n_max=3), 0, 5)
    assert lad.truncated and math.isnan(lad.K) and len(lad.stopping_times) == 8


def test_dyadic_coupled_monotone():
    t = LevyTriplet(0.5, 1.0, PowerLawTails(1.5, 0.5, 0.2, 0.2))
    cfg = SimConfig(dt=1e-3, horizon=3.0, hit_tolerance=1e-5)
    for i in range(10):
        ks = [dyadic_inverse(t, cfg, i, n).K for n in range(1, 6)]
        assert all(a <= b for a, b in zip(ks, ks[1:]))


def test_pri_existence_indicators():
    cfg = SimConfig(dt=1e-3, horizon=5.0, n_paths=200, hit_tolerance=1e-5)
    drift = estimate_pri_existence(DRIFT, SimConfig(dt=0.01, horizon=2.0, n_paths=20), [1, 2, 3])
    assert np.all(drift.finite_fraction == 1.0)
    bv = LevyTriplet(-3.0, 0.0, spectrally_negative(PowerLawTails(0.5, 0.5)))
    est = estimate_pri_existence(bv, cfg, [1, 2, 3])
    assert est.finite_fraction[-1] == 0.0 and est.trend == "decaying"
    sig = estimate_pri_existence(LevyTriplet(1.0, 1.0, PowerLawTails(1.5, 0.5, 0.1, 0.1)), cfg, [1, 2, 3, 4])
    assert sig.finite_fraction[-1] > 0.9 and sig.monotone_violations == 0


def test_overshoot_pure_drift():
    o = overshoot_survival(SubordinatorSpec(1.0), SimConfig(n_paths=100), 0.5, [0.1, 0.2])
    assert np.all(o.survival == 0.0)


def test_overshoot_unit_poisson_sandwich():
    lam = 3.0
    s = SubordinatorSpec(0.0, spectrally_positive(FiniteActivity(lam, "atom", {"loc": 1.0})))
    o = overshoot_survival(s, SimConfig(n_paths=1000), 0.5, [0.25])
    assert o.survival[0] == 1.0
    U = 1 / lam  # one visit at 0 of mean length 1/lam
    assert s.tail(0.75) * U <= o.survival[0] <= s.tail(0.25) * U


def test_overshoot_stable_arcsine():
    rho = 0.5
    s = SubordinatorSpec(0.0, OneSidedStable(rho))
    x, ys = 1.0, np.array([0.1, 0.5, 1.0, 3.0])
    o = overshoot_survival(s, SimConfig(n_paths=20_000, epsilon=1e-6), x, ys * x)
    dens = lambda t: math.sin(math.pi * rho) / math.pi * t**-rho / (1 + t)
    exact = [integrate.quad(dens, y, np.inf)[0] for y in ys]
    assert np.all(np.abs(o.survival - exact) <= 4 * o.se + 1e-3)


def test_path_dump_csv():
    paths = {0: simulate_path(DRIFT, SimConfig(dt=0.5, horizon=1.0), 0)}
    pcsv, jcsv = paths_to_csv(paths)
    assert pcsv.splitlines()[0] == "path_index,t,X_t"
    assert pcsv.splitlines()[1:] == ["0,0.0,0.0", "0,0.5,0.5", "0,1.0,1.0"]
    assert jcsv == "path_index,t,jump_size\r\n"


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(epsilon=1.5)
    with pytest.raises(ValueError):
        SimConfig(small_jump_mode="ignore")
