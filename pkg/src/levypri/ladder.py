"""Subordinator and ladder-height numerics.

Renewal functions U(x) = E ∫_0^ζ 1{H_t <= x} dt of (possibly killed)
subordinators, the integrals that connect them to the jump measure of the
underlying process, and the bracketing inequalities used to check them.

Renewal functions are tabulated and treated as piecewise linear between
grid points, with ``u0`` the mass U({0}). Stieltjes integrals against U use
the midpoint value of the integrand on every grid cell.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import _rng
from .criteria import IntegralResult, QuadConfig, Status, classify_bands
from .measures import (
    MINUS, PLUS, Activity, FiniteActivity, IndeterminateError, LevyMeasure, OneSided,
    OneSidedStable, ZeroMeasure,
)


@dataclass(frozen=True)
class SubordinatorSpec:
    """Drift, jump measure (positive side only) and killing rate."""

    drift: float
    measure: LevyMeasure = field(default_factory=ZeroMeasure)
    kill_rate: float = 0.0

    def __post_init__(self):
        if self.drift < 0 or self.kill_rate < 0:
            raise ValueError("drift and kill_rate must be nonnegative")
        if self.measure.activity(MINUS) is not Activity.ZERO:
            raise ValueError("a subordinator has no negative jumps")

    def tail(self, x):
        return self.measure.tail(PLUS, x)

    def integrated_tail(self, x: float) -> float:
        """A(x) = ∫_0^x tail(y) dy."""
        return self.measure.tail_moment(PLUS, 0.0, x, 0.0)

    def small_jump_drift(self, eps: float) -> float:
        return self.drift + self.measure.jump_moment(PLUS, 0.0, eps, 1)

    def to_dict(self):
        return {"drift": self.drift, "measure": self.measure.to_dict(), "kill_rate": self.kill_rate}


@dataclass
class RenewalFunction:
    grid: np.ndarray
    values: np.ndarray
    method: str
    u0: float = 0.0
    se: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.grid <= 0) or np.any(np.diff(self.grid) <= 0):
            raise ValueError("renewal grid must be increasing and positive")

    @property
    def x_max(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > self.x_max * (1 + 1e-12)) or np.any(x < 0):
            raise ValueError(f"renewal function tabulated on [0, {self.x_max}] only")
        out = np.interp(x, np.concatenate([[0.0], self.grid]), np.concatenate([[self.u0], self.values]))
        return out if out.ndim else float(out)

    def cells(self, a: float, b: float, extra=()):
        """Cell edges of (a, b] refined by ``extra`` points; returns (lo, hi, dU)."""
        pts = np.concatenate([[a, b], self.grid[(self.grid > a) & (self.grid < b)],
                              [t for t in extra if a < t < b]])
        edges = np.unique(pts)
        u = self(edges)
        return edges[:-1], edges[1:], np.diff(u)

    def stieltjes(self, g: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                  include_zero: bool = False, extra=()) -> float:
        """∫_(a,b] g dU, midpoint rule on cells; ``include_zero`` adds g(0) U({0})."""
        lo, hi, du = self.cells(a, b, extra)
        total = float(np.sum(g(0.5 * (lo + hi)) * du))
        if include_zero and a == 0.0:
            total += float(g(np.array([0.0]))[0]) * self.u0
        return total

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["x", "U"])
        w.writerow([0.0, repr(float(self.u0))])
        for x, u in zip(self.grid, self.values):
            w.writerow([repr(float(x)), repr(float(u))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, method: str = "imported") -> "RenewalFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["x", "U"]:
            raise ValueError("renewal CSV needs header 'x,U'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        u0 = 0.0
        if data[0, 0] == 0.0:
            u0 = data[0, 1]
            data = data[1:]
        return cls(data[:, 0], data[:, 1], method, u0=u0)


@dataclass(frozen=True)
class RenewalConfig:
    method: str = "monte_carlo"
    n_paths: int = 20000
    seed: int = 0
    # jumps below epsilon are replaced by their mean (folded into the drift)
    epsilon: float = 1e-4
    cells: int = 4000


def subordinator_passage(s: SubordinatorSpec, levels, n_paths: int, seed: int, epsilon: float,
                         purpose: str = "subordinator"):
    """First passage above each level for n_paths simulated subordinator paths.

    Event-driven: between jumps larger than ``epsilon`` the path moves at the
    compensated drift, so passage times are exact for the approximating
    compound-Poisson-plus-drift process. Returns (T, overshoot, zeta) with
    T = inf for paths killed (at zeta) before passage.
    """
    levels = np.asarray(levels, dtype=float)
    order = np.argsort(levels, kind="stable")
    lv = levels[order]
    n_lv = len(lv)
    drift = s.small_jump_drift(epsilon)
    rate = float(s.tail(epsilon))
    T = np.full((n_paths, n_lv), np.inf)
    O = np.full((n_paths, n_lv), np.nan)
    Z = np.full(n_paths, np.inf)
    if drift <= 0 and rate == 0:
        return T, O, Z
    for c0 in range(0, n_paths, _rng.CHUNK):
        n = min(_rng.CHUNK, n_paths - c0)
        rng = _rng.stream(seed, purpose, c0 // _rng.CHUNK)
        zeta = rng.exponential(1.0 / s.kill_rate, n) if s.kill_rate > 0 else np.full(n, np.inf)
        Z[c0:c0 + n] = zeta
        Tc = np.full((n, n_lv), np.inf)
        Oc = np.full((n, n_lv), np.nan)
        idx = np.arange(n)
        pos = np.zeros(n)
        now = np.zeros(n)
        # levels[: nxt[i]] are already passed by path i
        nxt = np.zeros(n, dtype=np.int64)
        while idx.size:
            m = idx.size
            tau = rng.exponential(1.0 / rate, m) if rate > 0 else np.full(m, np.inf)
            jump = s.measure.sample_jumps(PLUS, epsilon, m, rng) if rate > 0 else np.zeros(m)
            p, t0, z, j0 = pos[idx], now[idx], zeta[idx], nxt[idx]
            t_end = t0 + tau
            killed = t_end >= z
            run = np.minimum(t_end, z) - t0
            pre = p + drift * np.where(np.isfinite(run), run, 0.0) if drift > 0 else p.copy()
            if drift > 0:
                pre[np.isinf(run)] = np.inf
            post = np.where(killed, pre, pre + jump)
            # levels strictly below a position have been passed
            j_drift = np.maximum(np.searchsorted(lv, pre, side="left"), j0)
            j_jump = np.maximum(np.searchsorted(lv, post, side="left"), j_drift)
            for lo_j, hi_j, by_drift in ((j0, j_drift, True), (j_drift, j_jump, False)):
                cnt = hi_j - lo_j
                if not cnt.any():
                    continue
                rows = np.repeat(np.arange(m), cnt)
                offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
                cols = np.repeat(lo_j, cnt) + offs
                if by_drift:
                    Tc[idx[rows], cols] = t0[rows] + (lv[cols] - p[rows]) / drift
                    Oc[idx[rows], cols] = 0.0
                else:
                    Tc[idx[rows], cols] = t_end[rows]
                    Oc[idx[rows], cols] = post[rows] - lv[cols]
            pos[idx] = post
            now[idx] = t_end
            nxt[idx] = j_jump
            alive = ~killed & (j_jump < n_lv)
            idx = idx[alive]
        T[c0:c0 + n] = Tc
        O[c0:c0 + n] = Oc
    inv = np.empty_like(order)
    inv[order] = np.arange(n_lv)
    return T[:, inv], O[:, inv], Z


def _renewal_mc(s: SubordinatorSpec, grid: np.ndarray, cfg: RenewalConfig) -> RenewalFunction:
    T, _, Z = subordinator_passage(s, grid, cfg.n_paths, cfg.seed, cfg.epsilon, "renewal")
    occ = np.minimum(T, Z[:, None])
    if np.any(np.isinf(occ)):
        raise ValueError("unkilled subordinator never passes a level: renewal function infinite")
    return RenewalFunction(grid, occ.mean(axis=0), "monte_carlo",
                           se=occ.std(axis=0, ddof=1) / math.sqrt(cfg.n_paths))


def _renewal_solve(s: SubordinatorSpec, grid: np.ndarray, cfg: RenewalConfig) -> RenewalFunction:
    """Green measure of a compound-Poisson-plus-drift subordinator on a lattice."""
    m = s.measure
    if m.activity(PLUS) is Activity.INFINITE:
        raise ValueError("renewal_solve needs finite jump activity")
    lam = m.mass(PLUS)
    k = s.kill_rate
    if lam + k == 0:
        if s.drift == 0:
            raise ValueError("constant subordinator: renewal function infinite")
        return RenewalFunction(grid, grid / s.drift, "renewal_solve")
    x_max = float(grid[-1])
    h = x_max / cfg.cells
    n = cfg.cells + 1
    centers = np.arange(n) * h
    # jump law on the lattice: mass of ((j - 1/2) h, (j + 1/2) h] at index j
    upper = np.concatenate([[lam], m.tail(PLUS, centers[1:] - 0.5 * h)]) if lam > 0 else np.zeros(n)
    lower = m.tail(PLUS, centers + 0.5 * h) if lam > 0 else np.zeros(n)
    jump_pmf = (upper - lower) / lam if lam > 0 else np.zeros(n)
    if s.drift > 0:
        r = (lam + k) / s.drift
        cdf = -np.expm1(-r * (centers + 0.5 * h))
        drift_pmf = np.diff(np.concatenate([[0.0], cdf]))
    else:
        drift_pmf = np.zeros(n)
        drift_pmf[0] = 1.0
    survive = lam / (lam + k)
    step = np.convolve(drift_pmf, jump_pmf)[:n] * survive
    nu = np.zeros(n)
    nu[0] = 1.0
    green = nu.copy()
    for _ in range(100000):
        nu = np.convolve(nu, step)[:n]
        if nu.sum() < 1e-15:
            break
        green += nu

    def occupation(y):
        # expected time within [0, y] before the next jump, started at 0
        if s.drift > 0:
            # a vanishing drift overflows to the driftless limit, which is right
            with np.errstate(over="ignore"):
                return -np.expm1(-(lam + k) * np.maximum(y, 0.0) / s.drift) / (lam + k)
        return np.where(y >= 0, 1.0 / (lam + k), 0.0)

    vals = np.array([np.sum(green * occupation(x - centers) * (centers <= x + 1e-9 * h)) for x in grid])
    u0 = green[0] * float(occupation(0.0)) if s.drift == 0 else 0.0
    return RenewalFunction(grid, vals, "renewal_solve", u0=u0)


def _renewal_closed(s: SubordinatorSpec, grid: np.ndarray) -> RenewalFunction:
    m, d, k = s.measure, s.drift, s.kill_rate
    if m.activity(PLUS) is Activity.ZERO and d > 0:
        vals = grid / d if k == 0 else -np.expm1(-k * grid / d) / k
        return RenewalFunction(grid, vals, "closed_form")
    inner = m.inner if isinstance(m, OneSided) else m
    if isinstance(inner, OneSidedStable) and d == 0 and k == 0:
        return RenewalFunction(grid, grid**inner.rho / special.gamma(1 + inner.rho), "closed_form")
    raise ValueError("closed form available for pure drift and driftless unkilled stable subordinators")


def renewal_function(s: SubordinatorSpec, grid, cfg: RenewalConfig = RenewalConfig()) -> RenewalFunction:
    grid = np.asarray(grid, dtype=float)
    if cfg.method == "closed_form":
        return _renewal_closed(s, grid)
    if cfg.method == "renewal_solve":
        return _renewal_solve(s, grid, cfg)
    if cfg.method == "monte_carlo":
        if s.drift == 0 and not s.measure.small_jump_integrable(PLUS, 0.0) and cfg.epsilon <= 0:
            raise ValueError("driftless subordinator with infinite jump integral needs a cutoff epsilon > 0")
        return _renewal_mc(s, grid, cfg)
    raise ValueError(f"unknown renewal method {cfg.method!r}")


def erickson_envelope(s: SubordinatorSpec, x: float) -> float:
    """x / (drift + ∫_0^x tail + x * kill_rate): the order of magnitude of U(x)."""
    if x <= 0:
        raise ValueError("x must be positive")
    return x / (s.drift + s.integrated_tail(x) + x * s.kill_rate)


def vigon_upward_tail(measure: LevyMeasure, U_minus: RenewalFunction, x: float) -> float:
    """Upward ladder tail from the negative-side renewal function:
    ∫_(x,1] U_-(y - x) Π(dy), integrated by parts against the positive tail."""
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    top = min(1.0, measure.support_bound(PLUS))
    if top <= x:
        return 0.0
    if top - x > U_minus.x_max * (1 + 1e-12):
        raise ValueError(f"U_- must cover (0, {top - x:.6g}]; tabulated to {U_minus.x_max:.6g}")
    knots = np.concatenate([[0.0], U_minus.grid[U_minus.grid < top - x], [top - x]])
    u = U_minus(knots)
    slopes = np.diff(u) / np.diff(knots)
    pieces = measure.tail_moment_vec(PLUS, x + knots[:-1], x + knots[1:], 0.0)
    head = U_minus.u0 * float(measure.tail(PLUS, x)) - float(u[-1]) * float(measure.tail(PLUS, top))
    return max(head + float(np.dot(slopes, pieces)), 0.0)


def convolution_square(U: RenewalFunction, y: float, rtol: float = 1e-9) -> float:
    """U*U(y) = ∫_[0,y] U(y - x) U(dx), checked against (U(y/2))² <= U*U(y) <= U(y)²."""
    if not 0 < y <= U.x_max * (1 + 1e-12):
        raise ValueError("y outside the tabulated range")
    val = U.stieltjes(lambda x: U(np.clip(y - x, 0.0, None)), 0.0, y, include_zero=True, extra=(y / 2,))
    lo, hi = U(y / 2) ** 2, U(y) ** 2
    slack = rtol * max(hi, 1e-300)
    if not lo - slack <= val <= hi + slack:
        raise IndeterminateError(f"convolution square {val:.6g} outside [{lo:.6g}, {hi:.6g}]; grid too coarse")
    return val


@dataclass
class IResult:
    result: IntegralResult
    via_convolution: float | None = None


def evaluate_I(mu_plus_tail: Callable[[float], float], U_minus: RenewalFunction,
               cfg: QuadConfig = QuadConfig(), measure: LevyMeasure | None = None) -> IResult:
    """I = ∫_(0,1] tail_+(x) U_-(dx) over dyadic bands.

    Bands below the first grid point of U_- are not evaluated. With
    ``measure`` given, also reports ∫_(0,1] U_-*U_-(y) Π(dy), which equals I
    when ``mu_plus_tail`` comes from :func:`vigon_upward_tail`.
    """
    if U_minus.x_max < 1.0 * (1 - 1e-12):
        raise ValueError("U_- must cover (0, 1]")
    k_avail = int(math.floor(-math.log2(U_minus.grid[0]) + 1e-9))
    k_max = max(1, min(cfg.k_max, k_avail))
    masses = np.zeros(k_max)
    for k in range(k_max):
        a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        lo, hi, du = U_minus.cells(a, b)
        mids = 0.5 * (lo + hi)
        masses[k] = float(np.sum(np.array([mu_plus_tail(m) for m in mids]) * du))
    res = classify_bands(masses, np.zeros(k_max), cfg)
    conv = None
    if measure is not None:
        lo = U_minus.grid[0]
        edges = U_minus.grid[(U_minus.grid >= lo) & (U_minus.grid <= 1.0)]
        if edges[-1] < 1.0:
            edges = np.concatenate([edges, [1.0]])
        # right-continuous tails put an atom at 1 into the last cell
        dmass = -np.diff(measure.tail(PLUS, edges))
        mids = 0.5 * (edges[:-1] + edges[1:])
        conv = float(np.sum(np.array([convolution_square(U_minus, m) for m in mids]) * dmass))
    return IResult(res, conv)


def amicale_integree_residual(measure: LevyMeasure, mu_plus_tail: Callable[[float], float],
                              mu_minus_tail: Callable[[float], float], delta_plus: float, x: float) -> float:
    """∫_x^1 tail_-(y) dy  -  [∫_0^1 mu_+(y) mu_-(x + y) dy + delta_plus mu_-(x)]."""
    lhs = measure.tail_moment(MINUS, x, 1.0, 0.0)
    cross = integrate.quad(lambda y: mu_plus_tail(y) * mu_minus_tail(x + y), 0.0, 1.0, limit=200)[0]
    return lhs - cross - delta_plus * mu_minus_tail(x)
