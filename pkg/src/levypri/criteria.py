"""Integral tests for the existence of a partial right inverse.

The two integrals evaluated here share the denominator

    D(x) = ∫_0^x ∫_y^1 tail(-, s) ds dy = ∫_0^x s tail(-, s) ds + x ∫_x^1 tail(-, s) ds,

    J = ∫_(0,1] x² Π(dx) / D(x)²,        L = ∫_(0,1] x² Π(dx) / D(x).

Finiteness is decided from dyadic band masses: the integral over
(2^-k-1, 2^-k] is computed for k = 0..k_max-1 and the logarithm of the band
mass is regressed on k over the last ``fit_window`` bands.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measures import (
    MINUS, PLUS, Activity, IndeterminateError, LevyMeasure, LevyTriplet, PowerLawTails,
    VariationClass, classify_variation, integrability_report,
)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class QuadConfig:
    rtol: float = 1e-8
    atol: float = 1e-12
    max_evals: int = 10**6
    k_max: int = 60
    fit_window: int = 20
    # divergent when the fitted log band mass decays slower than slope_threshold * ln 2 per band
    slope_threshold: float = 0.02
    tail_tol: float = 1e-10
    # rms residual (natural log units) below which band decay counts as geometric
    max_fit_residual: float = 0.05
    nodes: int = 32
    # fewer bands than this never yield a decision
    min_bands: int = 6

    def to_dict(self):
        return dict(self.__dict__)


class Status(str, enum.Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INDETERMINATE = "indeterminate"


@dataclass
class IntegralResult:
    status: Status
    value: float
    abs_error: float
    band_masses: np.ndarray
    partial_sums: np.ndarray
    slope: float = math.nan
    local_exponent: float = math.nan
    analytic_exponent: float | None = None
    note: str = ""

    @property
    def convergent(self) -> bool:
        return self.status is Status.CONVERGENT

    def to_dict(self):
        return {"status": self.status.value, "value": self.value, "abs_error": self.abs_error,
                "slope": self.slope, "local_exponent": self.local_exponent,
                "analytic_exponent": self.analytic_exponent, "note": self.note,
                "band_masses": self.band_masses.tolist()}


def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def log_band_quad(h: Callable[[np.ndarray], np.ndarray], a: float, b: float, nodes: int,
                  breaks=()) -> tuple[float, float, int]:
    """Gauss-Legendre integral of h over [a, b] in log coordinates.

    Returns (value, error estimate, evaluations); the error estimate is the
    difference to the rule with half the nodes.
    """
    edges = [a, *sorted(t for t in breaks if a < t < b), b]
    total = coarse = 0.0
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        ul, uh = math.log(lo), math.log(hi)
        for n, acc in ((nodes, "fine"), (max(nodes // 2, 2), "coarse")):
            x, w = _gl(n)
            u = 0.5 * (uh - ul) * x + 0.5 * (uh + ul)
            s = np.exp(u)
            v = 0.5 * (uh - ul) * float(np.dot(w, h(s) * s))
            evals += n
            if acc == "fine":
                total += v
            else:
                coarse += v
    return total, abs(total - coarse), evals


def dyadic_band_integral(band: Callable[[float, float], tuple[float, float, int]],
                         cfg: QuadConfig, k_max: int | None = None) -> IntegralResult:
    """Run the band protocol; ``band(a, b)`` returns (mass, error, evaluations)."""
    k_max = cfg.k_max if k_max is None else k_max
    masses = np.zeros(k_max)
    errs = np.zeros(k_max)
    evals = 0
    for k in range(k_max):
        a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        m, e, n = band(a, b)
        masses[k] = max(m, 0.0)
        errs[k] = e
        evals += n
        if evals > cfg.max_evals:
            return IntegralResult(Status.INDETERMINATE, math.nan, math.inf, masses[:k + 1],
                                  np.cumsum(masses[:k + 1]), note="evaluation budget exhausted")
    return classify_bands(masses, errs, cfg)


def classify_bands(masses: np.ndarray, errs: np.ndarray, cfg: QuadConfig) -> IntegralResult:
    partial = np.cumsum(masses)
    quad_err = float(np.sum(errs))
    w = min(cfg.fit_window, len(masses))
    window = masses[-w:]
    if np.all(window == 0):
        return IntegralResult(Status.CONVERGENT, float(partial[-1]), quad_err, masses, partial,
                              slope=-math.inf, local_exponent=math.inf, note="band masses vanish")
    if w < max(3, min(cfg.min_bands, cfg.fit_window)):
        return IntegralResult(Status.INDETERMINATE, math.nan, math.inf, masses, partial,
                              note=f"only {w} bands available")
    if np.any(window == 0):
        return IntegralResult(Status.INDETERMINATE, math.nan, math.inf, masses, partial,
                              note="irregular band masses")
    k = np.arange(len(masses))[-w:]
    y = np.log(window)
    slope, icpt = np.polyfit(k, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * k + icpt)) ** 2)))
    exponent = -slope / LN2 - 1.0
    common = dict(band_masses=masses, partial_sums=partial, slope=float(slope), local_exponent=float(exponent))
    if slope >= -cfg.slope_threshold * LN2:
        return IntegralResult(Status.DIVERGENT, math.inf, math.nan, **common)
    r = math.exp(slope)
    tail = float(window[-1] * r / (1.0 - r))
    if tail <= cfg.tail_tol:
        return IntegralResult(Status.CONVERGENT, float(partial[-1]), quad_err + tail, **common)
    if resid <= cfg.max_fit_residual:
        return IntegralResult(Status.CONVERGENT, float(partial[-1]) + tail, quad_err + tail,
                              note="geometric tail extrapolated", **common)
    return IntegralResult(Status.INDETERMINATE, math.nan, math.inf,
                          note=f"band decay not geometric (rms residual {resid:.3g})", **common)


def _inner_tail(spec: LevyMeasure, x):
    """∫_x^1 tail(-, s) ds, elementwise."""
    return spec.tail_moment_vec(MINUS, x, 1.0, 0.0)


def _denominator(spec: LevyMeasure, x):
    x = np.asarray(x, dtype=float)
    return spec.tail_moment_vec(MINUS, 0.0, x, 1.0) + x * _inner_tail(spec, x)


def denominator_D(spec: LevyMeasure, x: float) -> float:
    if not 0 < x <= 1:
        raise ValueError("D(x) is defined for x in (0, 1]")
    if spec.activity(MINUS) is Activity.ZERO:
        return 0.0
    return float(_denominator(spec, x))


def _check_plus(spec: LevyMeasure) -> None:
    if spec.activity(PLUS) is Activity.ZERO:
        raise ValueError("criterion needs positive jumps: Π(0, ∞) = 0")


def band_masses_by_parts(spec: LevyMeasure, power: int, k_max: int, nodes: int):
    """Masses of x² Π(dx) / D(x)**power on the bands (2^-k-1, 2^-k], k < k_max.

    Integration by parts against the right-continuous tail:
    ∫_(a,b] g dΠ = g(a) tail(a) - g(b) tail(b) + ∫_a^b g'(x) tail(x) dx.
    All bands are evaluated in one vectorized pass; the error estimate per
    band is the change when the Gauss-Legendre rule is halved.
    """
    breaks = np.asarray(spec.breakpoints(PLUS), dtype=float)
    lo_e = 2.0 ** -(np.arange(k_max) + 1.0)
    hi_e = 2.0 * lo_e
    seg_lo, seg_hi, seg_band = [], [], []
    for k in range(k_max):
        inner = np.sort(breaks[(breaks > lo_e[k]) & (breaks < hi_e[k])])
        edges = np.concatenate([[lo_e[k]], inner, [hi_e[k]]])
        seg_lo.extend(edges[:-1])
        seg_hi.extend(edges[1:])
        seg_band.extend([k] * (len(edges) - 1))
    seg_lo, seg_hi, seg_band = map(np.asarray, (seg_lo, seg_hi, seg_band))

    def g(x):
        return x * x / _denominator(spec, x) ** power

    def dg_tail(x):
        d = _denominator(spec, x)
        dp = _inner_tail(spec, x)
        return (2 * x / d**power - power * x * x * dp / d ** (power + 1)) * spec.tail(PLUS, x)

    ul, uh = np.log(seg_lo), np.log(seg_hi)
    results = []
    for n in (nodes, max(nodes // 2, 2)):
        x, w = np.polynomial.legendre.leggauss(n)
        u = 0.5 * (uh - ul)[:, None] * x[None, :] + 0.5 * (uh + ul)[:, None]
        s = np.exp(u)
        vals = 0.5 * (uh - ul) * np.sum(w[None, :] * dg_tail(s) * s, axis=1)
        results.append(np.bincount(seg_band, weights=vals, minlength=k_max))
    head = g(lo_e) * spec.tail(PLUS, lo_e) - g(hi_e) * spec.tail(PLUS, hi_e)
    evals = (nodes + max(nodes // 2, 2)) * len(seg_lo) + 2 * k_max
    return head + results[0], np.abs(results[0] - results[1]), evals


def _evaluate(t: LevyTriplet, quad: QuadConfig, power: int) -> IntegralResult:
    spec = t.measure
    _check_plus(spec)
    masses, errs, evals = band_masses_by_parts(spec, power, quad.k_max, quad.nodes)
    if evals > quad.max_evals:
        return IntegralResult(Status.INDETERMINATE, math.nan, math.inf, masses, np.cumsum(masses),
                              note="evaluation budget exhausted")
    res = classify_bands(np.maximum(masses, 0.0), errs, quad)
    if isinstance(spec, PowerLawTails):
        res.analytic_exponent = (2 * spec.alpha - 3 - spec.beta if power == 2
                                 else spec.alpha - 1 - spec.beta)
    return res


def evaluate_J(t: LevyTriplet, quad: QuadConfig = QuadConfig()) -> IntegralResult:
    """J = ∫ x² Π(dx) / D(x)² over (0, 1]; requires Π(0,∞) > 0 and Π(-∞,0) = ∞."""
    if t.measure.activity(MINUS) is not Activity.INFINITE:
        raise ValueError("J is only consulted when the negative jumps have infinite mass")
    return _evaluate(t, quad, 2)


def evaluate_L(t: LevyTriplet, quad: QuadConfig = QuadConfig()) -> IntegralResult:
    """L = ∫ x² Π(dx) / D(x) over (0, 1]; requires both jump sides nonzero."""
    if t.measure.activity(MINUS) is Activity.ZERO:
        raise ValueError("L needs negative jumps: D vanishes identically otherwise")
    return _evaluate(t, quad, 1)


class Answer(str, enum.Enum):
    EXISTS = "exists"
    NOT_EXISTS = "not_exists"
    INDETERMINATE = "indeterminate"


class PriCase(str, enum.Enum):
    CONT_SIGMA = "continuous/sigma"
    CONT_DRIFT_UP = "continuous/drift_up"
    CONT_DRIFT_DOWN = "continuous/drift_down"
    CONT_DEGENERATE = "continuous/degenerate"
    FA_SIGMA = "finite_activity/sigma"
    FA_DRIFT_UP = "finite_activity/drift_up"
    FA_DRIFT_NONPOS = "finite_activity/drift_nonpos"
    SN_UV = "spectrally_negative/UV"
    SN_BV_DRIFT_UP = "spectrally_negative/BV_drift_up"
    SN_BV_DRIFT_NONPOS = "spectrally_negative/BV_drift_nonpos"
    UV_SIGMA = "UV/sigma"
    PLUS_ONLY_BV = "plus_infinite/BV"
    PLUS_ONLY_UV_NO_SIGMA = "plus_infinite/UV_no_sigma"
    BV_PLUS_INFINITE = "BV/plus_infinite"
    UV_J_FINITE = "UV/J-finite"
    UV_J_INFINITE = "UV/J-infinite"
    UV_J_INDETERMINATE = "UV/J-indeterminate"


_CASE_ANSWER = {
    PriCase.CONT_SIGMA: Answer.EXISTS, PriCase.CONT_DRIFT_UP: Answer.EXISTS,
    PriCase.CONT_DRIFT_DOWN: Answer.NOT_EXISTS, PriCase.CONT_DEGENERATE: Answer.NOT_EXISTS,
    PriCase.FA_SIGMA: Answer.EXISTS, PriCase.FA_DRIFT_UP: Answer.EXISTS,
    PriCase.FA_DRIFT_NONPOS: Answer.NOT_EXISTS,
    PriCase.SN_UV: Answer.EXISTS, PriCase.SN_BV_DRIFT_UP: Answer.EXISTS,
    PriCase.SN_BV_DRIFT_NONPOS: Answer.NOT_EXISTS,
    PriCase.UV_SIGMA: Answer.EXISTS,
    PriCase.PLUS_ONLY_BV: Answer.NOT_EXISTS, PriCase.PLUS_ONLY_UV_NO_SIGMA: Answer.NOT_EXISTS,
    PriCase.BV_PLUS_INFINITE: Answer.NOT_EXISTS,
    PriCase.UV_J_FINITE: Answer.EXISTS, PriCase.UV_J_INFINITE: Answer.NOT_EXISTS,
    PriCase.UV_J_INDETERMINATE: Answer.INDETERMINATE,
}


@dataclass
class PriDecision:
    case: PriCase
    variation: VariationClass
    J: IntegralResult | None = None
    L: IntegralResult | None = None

    @property
    def answer(self) -> Answer:
        return _CASE_ANSWER[self.case]

    def to_dict(self):
        return {"answer": self.answer.value, "case": self.case.value,
                "variation": self.variation.to_dict(),
                "J": None if self.J is None else self.J.to_dict(),
                "L": None if self.L is None else self.L.to_dict()}


def decide_pri(t: LevyTriplet, quad: QuadConfig = QuadConfig()) -> PriDecision:
    """Walk the case tree; raises IndeterminateError if classification fails."""
    var = classify_variation(t)
    rep = integrability_report(t.measure)
    plus, minus = rep.plus, rep.minus
    sigma = t.sigma

    if plus is Activity.ZERO and minus is Activity.ZERO:
        if sigma > 0:
            case = PriCase.CONT_SIGMA
        elif t.gamma > 0:
            case = PriCase.CONT_DRIFT_UP
        elif t.gamma < 0:
            case = PriCase.CONT_DRIFT_DOWN
        else:
            case = PriCase.CONT_DEGENERATE
        return PriDecision(case, var)

    if plus is not Activity.INFINITE and minus is not Activity.INFINITE:
        # jump-free motion until the first jump: sigma B_t + b t
        if sigma > 0:
            return PriDecision(PriCase.FA_SIGMA, var)
        return PriDecision(PriCase.FA_DRIFT_UP if var.b > 0 else PriCase.FA_DRIFT_NONPOS, var)

    if plus is not Activity.INFINITE:
        # remove the finitely many positive jumps: spectrally negative reduction
        if not var.bounded:
            return PriDecision(PriCase.SN_UV, var)
        return PriDecision(PriCase.SN_BV_DRIFT_UP if var.b > 0 else PriCase.SN_BV_DRIFT_NONPOS, var)

    if minus is not Activity.INFINITE:
        if sigma > 0:
            return PriDecision(PriCase.UV_SIGMA, var)
        return PriDecision(PriCase.PLUS_ONLY_BV if var.bounded else PriCase.PLUS_ONLY_UV_NO_SIGMA, var)

    if var.bounded:
        return PriDecision(PriCase.BV_PLUS_INFINITE, var)
    if sigma > 0:
        return PriDecision(PriCase.UV_SIGMA, var)
    j = evaluate_J(t, quad)
    case = {Status.CONVERGENT: PriCase.UV_J_FINITE, Status.DIVERGENT: PriCase.UV_J_INFINITE,
            Status.INDETERMINATE: PriCase.UV_J_INDETERMINATE}[j.status]
    return PriDecision(case, var, J=j)


@dataclass(frozen=True)
class CorollaryDecision:
    pri: bool
    creeps: bool


def corollary_decision(alpha: float, beta: float) -> CorollaryDecision:
    """Exponent test for tails ≍ x^-beta (positive) and x^-alpha (negative), sigma = 0."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    if not 0.0 <= beta < 2.0:
        raise ValueError("beta must lie in [0, 2)")
    return CorollaryDecision(pri=beta < 2 * alpha - 2, creeps=beta < alpha)


@dataclass
class CriterionReport:
    triplet: LevyTriplet
    decision: PriDecision
    J: IntegralResult | None = None
    L: IntegralResult | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        rep = integrability_report(self.triplet.measure)
        return {"triplet": self.triplet.to_dict(), "integrability": rep.to_dict(),
                "decision": self.decision.to_dict(),
                "J": None if self.J is None else self.J.to_dict(),
                "L": None if self.L is None else self.L.to_dict(), "notes": list(self.notes)}


def criterion_report(t: LevyTriplet, quad: QuadConfig = QuadConfig()) -> CriterionReport:
    """Decision plus J and L wherever their preconditions hold."""
    decision = decide_pri(t, quad)
    rep = integrability_report(t.measure)
    j = decision.J
    l = None
    notes = []
    if rep.plus is not Activity.ZERO and rep.minus is Activity.INFINITE:
        j = j if j is not None else evaluate_J(t, quad)
        l = evaluate_L(t, quad)
    else:
        notes.append("J and L not evaluated: need positive jumps and infinitely many negative jumps")
    decision.J, decision.L = j, l
    return CriterionReport(t, decision, j, l, notes)
