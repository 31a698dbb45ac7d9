import math

import numpy as np
import pytest
from scipy import integrate

from levypri.criteria import (
    Answer, PriCase, QuadConfig, Status, classify_bands, corollary_decision, criterion_report, decide_pri,
    denominator_D, evaluate_J, evaluate_L,
)
from levypri.measures import (
    FiniteActivity, LevyTriplet, PowerLawTails, SumMeasure, TabulatedTails, ZeroMeasure,
    spectrally_negative, spectrally_positive,
)


def _D_exact(alpha, x):
    return x ** (2 - alpha) / (2 - alpha) + x * (x ** (1 - alpha) - 1) / (alpha - 1)


def _oracle(alpha, beta, power):
    """∫ x² Π⁺(dx) / D^power from the density plus the atom at 1."""
    f = lambda x: x**2 * beta * x ** (-beta - 1) / _D_exact(alpha, x) ** power
    body = integrate.quad(lambda u: f(math.exp(u)) * math.exp(u), -60, 0, limit=400)[0]
    return body + 1.0 / _D_exact(alpha, 1.0) ** power


def test_denominator_closed_form():
    m = PowerLawTails(1.5, 0.5)
    for x in (1e-4, 0.01, 0.3, 1.0):
        assert denominator_D(m, x) == pytest.approx(_D_exact(1.5, x), rel=1e-10)


@pytest.mark.parametrize("alpha,beta", [(1.5, 0.5), (1.8, 1.0), (1.3, 0.2)])
def test_J_value_against_quadrature(alpha, beta):
    t = LevyTriplet(0.0, 0.0, PowerLawTails(alpha, beta))
    r = evaluate_J(t)
    assert r.status is Status.CONVERGENT
    assert r.value == pytest.approx(_oracle(alpha, beta, 2), rel=1e-6)


def test_J_reference_value():
    r = evaluate_J(LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 0.5)))
    assert r.value == pytest.approx(0.375, rel=1e-6)
    assert r.local_exponent == pytest.approx(-0.5, abs=1e-3)
    assert r.analytic_exponent == pytest.approx(-0.5)


def test_L_value_against_quadrature():
    t = LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 0.5))
    r = evaluate_L(t)
    assert r.status is Status.CONVERGENT
    assert r.value == pytest.approx(_oracle(1.5, 0.5, 1), rel=1e-6)


@pytest.mark.parametrize("alpha,beta", [(1.2, 1.0), (1.5, 1.5), (1.1, 0.3)])
def test_J_divergent(alpha, beta):
    r = evaluate_J(LevyTriplet(0.0, 0.0, PowerLawTails(alpha, beta)))
    assert r.status is Status.DIVERGENT
    assert r.local_exponent == pytest.approx(2 * alpha - 3 - beta, abs=0.05)


def test_J_needs_infinite_negative_side():
    with pytest.raises(ValueError):
        evaluate_J(LevyTriplet(0.0, 0.0, spectrally_positive(PowerLawTails(1.5, 0.5))))


def test_classify_bands_rules():
    cfg = QuadConfig()
    k = np.arange(60)
    flat = classify_bands(np.ones(60), np.zeros(60), cfg)
    assert flat.status is Status.DIVERGENT
    geo = classify_bands(0.5**k, np.zeros(60), cfg)
    assert geo.status is Status.CONVERGENT and geo.value == pytest.approx(2.0)
    slow = classify_bands(2.0 ** (-0.05 * k), np.zeros(60), cfg)
    assert slow.status is Status.CONVERGENT and "extrapolated" in slow.note
    noisy = classify_bands(2.0 ** (-0.1 * k) * np.where(k % 2, 1.0, 3.0), np.zeros(60), cfg)
    assert noisy.status is Status.INDETERMINATE
    few = classify_bands(0.5 ** np.arange(3), np.zeros(3), cfg)
    assert few.status is Status.INDETERMINATE


def test_decide_branches():
    assert decide_pri(LevyTriplet(0.0, 1.0, PowerLawTails(1.5, 1.9))).case is PriCase.UV_SIGMA
    d = decide_pri(LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 0.5)))
    assert d.case is PriCase.UV_J_FINITE and d.answer is Answer.EXISTS
    d = decide_pri(LevyTriplet(0.0, 0.0, PowerLawTails(1.2, 1.0)))
    assert d.case is PriCase.UV_J_INFINITE and d.answer is Answer.NOT_EXISTS
    bv = decide_pri(LevyTriplet(0.0, 0.0, PowerLawTails(0.5, 0.5)))
    assert bv.case is PriCase.BV_PLUS_INFINITE and bv.answer is Answer.NOT_EXISTS


@pytest.mark.parametrize("gamma,sigma,case", [
    (0.0, 1.0, PriCase.CONT_SIGMA), (1.0, 0.0, PriCase.CONT_DRIFT_UP),
    (-1.0, 0.0, PriCase.CONT_DRIFT_DOWN), (0.0, 0.0, PriCase.CONT_DEGENERATE),
])
def test_decide_continuous(gamma, sigma, case):
    assert decide_pri(LevyTriplet(gamma, sigma, ZeroMeasure())).case is case


def test_decide_finite_activity_uses_b():
    # unit atom at +1 with rate 1: b = gamma - 1
    m = FiniteActivity(1.0, "atom", {"loc": 1.0})
    assert decide_pri(LevyTriplet(1.5, 0.0, m)).answer is Answer.EXISTS
    assert decide_pri(LevyTriplet(0.5, 0.0, m)).answer is Answer.NOT_EXISTS
    assert decide_pri(LevyTriplet(0.5, 0.2, m)).case is PriCase.FA_SIGMA


def test_decide_spectrally_negative():
    sn_uv = LevyTriplet(0.0, 0.0, spectrally_negative(PowerLawTails(1.5, 0.5)))
    assert decide_pri(sn_uv).case is PriCase.SN_UV
    sn_bv = lambda g: LevyTriplet(g, 0.0, spectrally_negative(PowerLawTails(0.5, 0.5)))
    assert decide_pri(sn_bv(-3.0)).case is PriCase.SN_BV_DRIFT_NONPOS
    assert decide_pri(sn_bv(0.0)).case is PriCase.SN_BV_DRIFT_UP
    # finitely many upward jumps do not change the answer
    mixed = SumMeasure((spectrally_negative(PowerLawTails(1.5, 0.5)), FiniteActivity(1.0, "atom", {"loc": 0.5})))
    assert decide_pri(LevyTriplet(0.0, 0.0, mixed)).case is PriCase.SN_UV


def test_decide_positive_infinite_only():
    sp = lambda s: LevyTriplet(0.0, s, spectrally_positive(PowerLawTails(1.5, 1.5)))
    assert decide_pri(sp(1.0)).answer is Answer.EXISTS
    assert decide_pri(sp(0.0)).case is PriCase.PLUS_ONLY_UV_NO_SIGMA
    bv = LevyTriplet(5.0, 0.0, spectrally_positive(PowerLawTails(0.5, 0.5)))
    assert decide_pri(bv).case is PriCase.PLUS_ONLY_BV


def test_tabulated_power_law_matches_parametric():
    grid = np.geomspace(1e-8, 0.999, 200)
    m = TabulatedTails(tuple(grid), tuple(grid**-0.5), tuple(grid**-1.5))
    r = evaluate_J(LevyTriplet(0.0, 0.0, m))
    assert r.status is Status.CONVERGENT
    assert r.local_exponent == pytest.approx(-0.5, abs=0.05)


@pytest.mark.parametrize("alpha,beta,pri,creep", [(1.5, 0.5, True, True), (1.2, 1.0, False, True),
                                                   (1.5, 1.6, False, False)])
def test_corollary(alpha, beta, pri, creep):
    c = corollary_decision(alpha, beta)
    assert (c.pri, c.creeps) == (pri, creep)


def test_corollary_domain():
    with pytest.raises(ValueError):
        corollary_decision(0.9, 0.5)


def test_criterion_report_serializes():
    rep = criterion_report(LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 0.5)))
    d = rep.to_dict()
    assert d["decision"]["case"] == "UV/J-finite"
    assert d["J"]["status"] == "convergent" and d["L"]["status"] == "convergent"
