"""Monte Carlo paths, hitting times and the dyadic right-inverse construction.

Paths are compound-Poisson approximations: jumps with |x| > epsilon are
simulated exactly, smaller jumps are either dropped (their compensator kept
in the drift) or replaced by a Gaussian of matching variance. The
continuous part is sampled exactly at the skeleton times.

Exact-level hits are detected per process class:

* ``A`` (Gaussian part present): linear crossing between skeleton values,
  or a Brownian-bridge excursion beyond the level, plus proximity within
  the hit tolerance at skeleton points.
* ``B`` (no Gaussian part, finitely many positive jumps): the path is
  piecewise linear between jumps, so crossings of the linear segments are
  exact hits.
* ``C`` (no Gaussian part, infinitely many positive jumps): proximity
  within the tolerance at skeleton points only, since the drift standing in
  for dropped small jumps would fake continuous crossings. Heuristic;
  reported at three tolerances.

Anything that did not happen by ``horizon`` is reported as infinite.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .ladder import SubordinatorSpec, subordinator_passage
from .measures import MINUS, PLUS, Activity, LevyTriplet


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 0.01
    dt: float = 1e-3
    horizon: float = 10.0
    n_paths: int = 1000
    seed: int = 0
    small_jump_mode: str = "drop_compensate"
    hit_tolerance: float = 1e-5
    theta: float = 1.0
    n_max: int = 10
    max_jumps: int = 10**7

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.dt <= 0 or self.horizon <= 0 or self.n_paths <= 0:
            raise ValueError("dt, horizon and n_paths must be positive")
        if self.small_jump_mode not in ("drop_compensate", "gaussian_substitute"):
            raise ValueError("small_jump_mode must be drop_compensate or gaussian_substitute")
        if self.hit_tolerance <= 0 or self.theta <= 0:
            raise ValueError("hit_tolerance and theta must be positive")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class PathSkeleton:
    times: np.ndarray
    values: np.ndarray
    # X(t-) at each skeleton time; differs from ``values`` exactly at logged jumps
    left_values: np.ndarray
    jump_log: np.ndarray
    seg_max: np.ndarray | None = None
    seg_min: np.ndarray | None = None


@dataclass(frozen=True)
class Effective:
    drift: float
    sigma: float
    rate_plus: float
    rate_minus: float
    hit_class: str


def effective_process(t: LevyTriplet, cfg: SimConfig) -> Effective:
    m, eps = t.measure, cfg.epsilon
    drift = t.gamma - m.jump_moment(PLUS, eps, 1.0, 1) + m.jump_moment(MINUS, eps, 1.0, 1)
    var = t.sigma**2
    if cfg.small_jump_mode == "gaussian_substitute":
        var += m.jump_moment(PLUS, 0.0, eps, 2) + m.jump_moment(MINUS, 0.0, eps, 2)
    sigma = math.sqrt(var)
    plus = m.activity(PLUS)
    if sigma > 0:
        cls = "A"
    elif plus is not Activity.INFINITE:
        cls = "B"
    else:
        cls = "C"
    return Effective(drift, sigma, float(m.tail(PLUS, eps)), float(m.tail(MINUS, eps)), cls)


def suggest_epsilon(t: LevyTriplet, horizon: float, target: float) -> float:
    """Smallest cutoff whose big-jump count over ``horizon`` stays below ``target``."""
    lo, hi = 1e-12, 0.999
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        rate = float(t.measure.tail(PLUS, mid)) + float(t.measure.tail(MINUS, mid))
        lo, hi = (mid, hi) if rate * horizon > target else (lo, mid)
    return hi


def simulate_path(t: LevyTriplet, cfg: SimConfig, path_index: int) -> PathSkeleton:
    eff = effective_process(t, cfg)
    H = cfg.horizon
    expected = (eff.rate_plus + eff.rate_minus) * H
    if expected > cfg.max_jumps:
        raise ValueError(f"about {expected:.3g} jumps per path exceed max_jumps={cfg.max_jumps}; "
                         f"try epsilon >= {suggest_epsilon(t, H, cfg.max_jumps / 10):.3g}")
    rng = _rng.stream(cfg.seed, "path", path_index)
    n_plus = rng.poisson(eff.rate_plus * H) if eff.rate_plus > 0 else 0
    n_minus = rng.poisson(eff.rate_minus * H) if eff.rate_minus > 0 else 0
    jt = rng.uniform(0.0, H, n_plus + n_minus)
    js = np.concatenate([t.measure.sample_jumps(PLUS, cfg.epsilon, n_plus, rng),
                         -t.measure.sample_jumps(MINUS, cfg.epsilon, n_minus, rng)])
    order = np.argsort(jt, kind="stable")
    jt, js = jt[order], js[order]

    n_grid = int(math.ceil(H / cfg.dt - 1e-9))
    grid = np.minimum(np.arange(n_grid + 1) * cfg.dt, H)
    times = np.concatenate([grid, jt])
    is_jump = np.concatenate([np.zeros(len(grid), bool), np.ones(len(jt), bool)])
    order = np.argsort(times, kind="stable")
    times, is_jump = times[order], is_jump[order]
    jump_size = np.zeros(len(times))
    jump_size[is_jump] = js

    dts = np.diff(times)
    cont = np.zeros(len(times))
    if eff.sigma > 0:
        incr = eff.drift * dts + eff.sigma * np.sqrt(dts) * rng.standard_normal(len(dts))
    else:
        incr = eff.drift * dts
    cont[1:] = np.cumsum(incr)
    jumps_cum = np.cumsum(jump_size)
    values = cont + jumps_cum
    left = values - jump_size

    seg_max = seg_min = None
    if eff.sigma > 0:
        a, b = values[:-1], left[1:]
        var = eff.sigma**2 * dts
        u1 = rng.random(len(dts))
        u2 = rng.random(len(dts))
        # maximum / minimum of the Brownian bridge from a to b by inversion
        seg_max = 0.5 * (a + b + np.sqrt((b - a) ** 2 - 2 * var * np.log(u1)))
        seg_min = 0.5 * (a + b - np.sqrt((b - a) ** 2 - 2 * var * np.log(u2)))
    log = np.column_stack([jt, js]) if len(jt) else np.empty((0, 2))
    return PathSkeleton(times, values, left, log, seg_max, seg_min)


def hit_times(path: PathSkeleton, level: float, hit_class: str, eta: float) -> np.ndarray:
    """Sorted times at which ``path`` is taken to sit exactly at ``level``.

    Classes A and B: at most one hit per skeleton interval from crossings.
    Classes A and C: skeleton points within ``eta``.
    """
    t0, t1 = path.times[:-1], path.times[1:]
    a, b = path.values[:-1], path.left_values[1:]
    da, db = a - level, b - level
    cross = da * db <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(b != a, (level - a) / (b - a), 0.0)
    out = [t0[cross] + frac[cross] * (t1 - t0)[cross]] if hit_class != "C" else []
    if hit_class == "A" and path.seg_max is not None:
        bridge = ~cross & (((level > np.maximum(a, b)) & (path.seg_max >= level))
                           | ((level < np.minimum(a, b)) & (path.seg_min <= level)))
        out.append(0.5 * (t0 + t1)[bridge])
    if hit_class in ("A", "C"):
        near = (np.abs(path.values - level) <= eta) | (np.abs(path.left_values - level) <= eta)
        out.append(path.times[near])
    return np.unique(np.concatenate(out)) if out else np.empty(0)


@dataclass(frozen=True)
class Passage:
    time: float
    overshoot: float


def first_passage_above(t: LevyTriplet, cfg: SimConfig, path_index: int, level: float) -> Passage:
    """First time the path exceeds ``level`` and by how much (0 when it creeps)."""
    if level <= 0:
        raise ValueError("level must be positive")
    eff = effective_process(t, cfg)
    return _passage(simulate_path(t, cfg, path_index), level, eff.sigma > 0)


def _passage(path: PathSkeleton, level: float, bridge: bool) -> Passage:
    t0, t1 = path.times[:-1], path.times[1:]
    a, b = path.values[:-1], path.left_values[1:]
    post = path.values[1:]
    below = a <= level
    lin = below & (b > level)
    brg = below & ~lin & (path.seg_max > level) if bridge else np.zeros_like(lin)
    jmp = below & (b <= level) & ~brg & (post > level)
    hit = lin | brg | jmp
    if not np.any(hit):
        return Passage(math.inf, math.nan)
    i = int(np.argmax(hit))
    if lin[i]:
        return Passage(float(t0[i] + (level - a[i]) / (b[i] - a[i]) * (t1[i] - t0[i])), 0.0)
    if brg[i]:
        return Passage(float(0.5 * (t0[i] + t1[i])), 0.0)
    return Passage(float(t1[i]), float(post[i] - level))


@dataclass
class LevelRecord:
    level: float
    one_minus_laplace: float
    one_minus_laplace_se: float
    p_hat: float
    p_hat_se: float
    method: str
    heuristic: bool = False
    by_tolerance: list = field(default_factory=list)
    note: str = ""


def _level_record(T: np.ndarray, level: float, theta: float, method: str, heuristic=False, by_tol=(),
                  note="") -> LevelRecord:
    n = len(T)
    f = -np.expm1(-theta * T)
    miss = np.isinf(T).astype(float)
    return LevelRecord(level, float(f.mean()), float(f.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
                       float(miss.mean()), float(miss.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
                       method, heuristic, list(by_tol), note)


def _first_hit(path, level, cls, eta):
    h = hit_times(path, level, cls, eta)
    return float(h[0]) if len(h) else math.inf


def _check_eta(eta: float, level: float) -> None:
    if eta > level / 100:
        raise ValueError(f"hit tolerance {eta:g} must not exceed level/100 = {level / 100:g}")


def estimate_hit_functionals(t: LevyTriplet, cfg: SimConfig, levels, threads: int = 1) -> list[LevelRecord]:
    """1 - E[exp(-theta T_x)] and P(T_x > horizon) for each level, same paths."""
    levels = [float(x) for x in levels]
    for x in levels:
        if x <= 0:
            raise ValueError("levels must be positive")
        _check_eta(cfg.hit_tolerance, x)
    eff = effective_process(t, cfg)
    etas = [cfg.hit_tolerance] if eff.hit_class != "C" else [cfg.hit_tolerance / 2**j for j in range(3)]

    def one(i):
        path = simulate_path(t, cfg, i)
        return [[_first_hit(path, x, eff.hit_class, e) for e in etas] for x in levels]

    rows = _map(one, range(cfg.n_paths), threads)
    T = np.array(rows)  # paths x levels x tolerances
    out = []
    note = {"A": "bridge crossings plus tolerance hits; discretization bias O(dt)",
            "B": "exact for the piecewise-linear approximation",
            "C": "tolerance hits only; heuristic, see by_tolerance trend"}[eff.hit_class]
    for j, x in enumerate(levels):
        by_tol = []
        if eff.hit_class == "C":
            for k, e in enumerate(etas):
                r = _level_record(T[:, j, k], x, cfg.theta, "C")
                by_tol.append({"eta": e, "one_minus_laplace": r.one_minus_laplace, "p_hat": r.p_hat})
        rec = _level_record(T[:, j, 0], x, cfg.theta, eff.hit_class, eff.hit_class == "C", by_tol, note)
        if eff.hit_class == "C" and all(b["p_hat"] == 1.0 for b in by_tol):
            rec.note += "; inconclusive: no hits at any tolerance"
        out.append(rec)
    return out


def estimate_hit_functional(t: LevyTriplet, cfg: SimConfig, level: float) -> LevelRecord:
    return estimate_hit_functionals(t, cfg, [level])[0]


@dataclass
class DyadicLadder:
    n: int
    stopping_times: np.ndarray
    K: float
    truncated: bool = False


def _ladder(hits_by_level, n: int, n_top: int, budget: int) -> DyadicLadder:
    steps = 2**n
    stride = 2 ** (n_top - n)
    todo = min(steps, budget)
    T = np.full(todo, math.inf)
    s = 0.0
    for k in range(1, todo + 1):
        arr = hits_by_level[k * stride - 1]
        pos = int(np.searchsorted(arr, s, side="left"))
        if pos == len(arr):
            break
        s = float(arr[pos])
        T[k - 1] = s
    truncated = todo < steps
    return DyadicLadder(n, T, math.nan if truncated else float(T[-1]), truncated)


def _path_hits(t, cfg, path_index, n_top, eff):
    _check_eta(cfg.hit_tolerance, 2.0**-n_top)
    path = simulate_path(t, cfg, path_index)
    levels = np.arange(1, 2**n_top + 1) / 2**n_top
    return [hit_times(path, x, eff.hit_class, cfg.hit_tolerance) for x in levels]


def dyadic_inverse(t: LevyTriplet, cfg: SimConfig, path_index: int, n: int) -> DyadicLadder:
    """Stopping times T_n^k = first hit of k/2^n after T_n^(k-1), and K^(n) = T_n^(2^n)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    n_top = min(n, cfg.n_max)
    hits = _path_hits(t, cfg, path_index, n_top, effective_process(t, cfg))
    if n > cfg.n_max:
        # finer levels than the budget allows: only the first 2^n_max steps, flagged
        return DyadicLadder(n, _ladder(hits, n_top, n_top, 2**n_top).stopping_times, math.nan, True)
    return _ladder(hits, n, n_top, 2**n)


@dataclass
class PriEstimate:
    n_list: list
    K: np.ndarray  # paths x len(n_list), inf when not reached by the horizon
    finite_fraction: np.ndarray
    finite_fraction_se: np.ndarray
    levels: list
    trend: str
    monotone_violations: int
    hit_class: str

    def rows(self):
        for j, n in enumerate(self.n_list):
            rec = self.levels[j]
            yield {"n": n, "level": rec.level, "finite_fraction": float(self.finite_fraction[j]),
                   "finite_fraction_se": float(self.finite_fraction_se[j]),
                   "one_minus_laplace": rec.one_minus_laplace, "one_minus_laplace_se": rec.one_minus_laplace_se,
                   "p_hat": rec.p_hat, "p_hat_se": rec.p_hat_se, "hit_class": self.hit_class,
                   "trend": self.trend}


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def estimate_pri_existence(t: LevyTriplet, cfg: SimConfig, n_list, threads: int = 1) -> PriEstimate:
    """Horizon-censored fraction of paths with finite K^(n), for each n in n_list.

    All n use the same stored path per path index, so K^(n) is nondecreasing
    in n path by path, and so is the finite fraction. The trend is an
    indicator, not a proof: ``decaying`` when the fraction ends at zero or
    at most half its first value, ``stabilizing`` when the last step drops
    by no more than 3 standard errors, else ``inconclusive``.
    """
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1 or n_list[-1] > cfg.n_max:
        raise ValueError(f"n_list must lie within 1..n_max={cfg.n_max}")
    eff = effective_process(t, cfg)
    n_top = n_list[-1]

    def one(i):
        hits = _path_hits(t, cfg, i, n_top, eff)
        ks = [_ladder(hits, n, n_top, 2**n).K for n in n_list]
        first = [(h[0] if len(h) else math.inf) for h in (hits[2 ** (n_top - n) - 1] for n in n_list)]
        return ks, first

    out = _map(one, range(cfg.n_paths), threads)
    K = np.array([o[0] for o in out])
    T1 = np.array([o[1] for o in out])
    fin = np.isfinite(K)
    frac = fin.mean(axis=0)
    se = np.sqrt(frac * (1 - frac) / cfg.n_paths)
    viol = int(np.sum(K[:, 1:] < K[:, :-1]))
    levels = [_level_record(T1[:, j], 2.0**-n, cfg.theta, eff.hit_class, eff.hit_class == "C")
              for j, n in enumerate(n_list)]
    if frac[-1] == 0 or frac[-1] <= frac[0] / 2:
        trend = "decaying"
    elif len(frac) < 2 or frac[-2] - frac[-1] <= 3 * max(se[-1], 1.0 / cfg.n_paths):
        trend = "stabilizing"
    else:
        trend = "inconclusive"
    return PriEstimate(n_list, K, frac, se, levels, trend, viol, eff.hit_class)


@dataclass
class OvershootSurvival:
    x: float
    y: np.ndarray
    survival: np.ndarray
    se: np.ndarray


def overshoot_survival_table(s: SubordinatorSpec, cfg: SimConfig, xs, y_grid) -> list[OvershootSurvival]:
    """Empirical P(O(x) > y) for several levels x, all from the same paths."""
    xs = [float(x) for x in xs]
    if min(xs) <= 0:
        raise ValueError("x must be positive")
    y = np.asarray(y_grid, dtype=float)
    _, O, _ = subordinator_passage(s, xs, cfg.n_paths, cfg.seed, cfg.epsilon, "overshoot")
    # killed paths never overshoot
    O = np.nan_to_num(O, nan=-1.0)
    out = []
    for j, x in enumerate(xs):
        surv = (O[:, j][:, None] > y[None, :]).mean(axis=0)
        out.append(OvershootSurvival(x, y, surv, np.sqrt(surv * (1 - surv) / cfg.n_paths)))
    return out


def overshoot_survival(s: SubordinatorSpec, cfg: SimConfig, x: float, y_grid) -> OvershootSurvival:
    """Empirical P(O(x) > y) for the overshoot of a subordinator above x."""
    return overshoot_survival_table(s, cfg, [x], y_grid)[0]


def paths_to_csv(paths: dict[int, PathSkeleton]) -> tuple[str, str]:
    """(path CSV with path_index,t,X_t ; jump CSV with path_index,t,jump_size)."""
    pbuf, jbuf = io.StringIO(), io.StringIO()
    pw = csv.writer(pbuf, lineterminator="\r\n")
    jw = csv.writer(jbuf, lineterminator="\r\n")
    pw.writerow(["path_index", "t", "X_t"])
    jw.writerow(["path_index", "t", "jump_size"])
    for i in sorted(paths):
        p = paths[i]
        for tt, v in zip(p.times, p.values):
            pw.writerow([i, repr(float(tt)), repr(float(v))])
        for tt, js in p.jump_log:
            jw.writerow([i, repr(float(tt)), repr(float(js))])
    return pbuf.getvalue(), jbuf.getvalue()
