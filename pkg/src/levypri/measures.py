"""Lévy measures described by their one-sided tail functions.

Every measure is stored through the two tails

    tail(+, x) = Π((x, ∞)),      tail(-, x) = Π((-∞, -x)),      x > 0,

which are nonincreasing and right-continuous. Jump moments, masses and the
samplers used by the simulator are all derived from these tails, so a new
measure family only has to provide ``tail`` and a few closed forms where
they are cheap.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import integrate, special, stats

PLUS = "plus"
MINUS = "minus"
SIDES = (PLUS, MINUS)

# Margin on a fitted tail exponent before a tabulated measure is classified.
EXPONENT_MARGIN = 0.05


class IndeterminateError(ValueError):
    """A numerical question about a measure cannot be settled from the data."""


class Activity(str, enum.Enum):
    ZERO = "zero"
    FINITE = "finite"
    INFINITE = "infinite"


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def _check_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("tail functions are defined for x > 0 only")
    return arr


def _power_integral(c: float, e: float, a: float, b: float) -> float:
    """Integral of c * s**e over [a, b] with 0 <= a <= b < inf."""
    if c == 0 or b <= a:
        return 0.0
    q = e + 1.0
    if a == 0.0 and q <= 0:
        return math.inf
    if q == 0:
        return c * math.log(b / a)
    return c * (b**q - a**q) / q


class LevyMeasure:
    """Base class; subclasses implement :meth:`tail` and :meth:`activity`."""

    variant: str = ""

    # -- to be provided by subclasses -------------------------------------
    def tail(self, side: str, x):
        raise NotImplementedError

    def activity(self, side: str) -> Activity:
        raise NotImplementedError

    def small_jump_integrable(self, side: str, p: float) -> bool:
        """Whether the integral of s**p * tail(s) over (0, 1] is finite."""
        raise NotImplementedError

    def support_bound(self, side: str) -> float:
        return math.inf

    def breakpoints(self, side: str) -> np.ndarray:
        return np.empty(0)

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- derived quantities ------------------------------------------------
    def mass(self, side: str) -> float:
        act = self.activity(side)
        if act is Activity.ZERO:
            return 0.0
        if act is Activity.INFINITE:
            return math.inf
        return self._finite_mass(side)

    def _finite_mass(self, side: str) -> float:
        # tail at 0+ for a finite side: tail is bounded and right-continuous
        return float(self.tail(side, 1e-300))

    def total_mass(self) -> float:
        return self.mass(PLUS) + self.mass(MINUS)

    def tail_moment(self, side: str, a: float, b: float, p: float) -> float:
        """Integral of s**p * tail(side, s) over [a, b]."""
        _check_side(side)
        if b <= a:
            return 0.0
        b = min(b, self.support_bound(side))
        if b <= a:
            return 0.0
        if a == 0.0:
            if not self.small_jump_integrable(side, p):
                return math.inf
        return self._numeric_tail_moment(side, a, b, p)

    def tail_moment_vec(self, side: str, a, b, p: float) -> np.ndarray:
        """Elementwise :meth:`tail_moment` over broadcast arrays ``a``, ``b``."""
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        return np.array([self.tail_moment(side, float(x), float(y), p) for x, y in zip(a.ravel(), b.ravel())]
                        ).reshape(a.shape)

    def _numeric_tail_moment(self, side, a, b, p):
        def f(s):
            return s**p * float(self.tail(side, s))

        edges = sorted({a, b, *(t for t in self.breakpoints(side) if a < t < b)})
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if lo == 0.0:
                total += _log_quad(f, hi * 1e-200, hi)
            elif hi / lo > 8:
                total += _log_quad(f, lo, hi)
            else:
                total += integrate.quad(f, lo, hi, limit=200)[0]
        return total

    def jump_moment(self, side: str, a: float, b: float, k: int) -> float:
        """Integral of x**k over jumps with |x| in (a, b], as a positive number."""
        if b <= a:
            return 0.0
        b = min(b, self.support_bound(side))
        if b <= a:
            return 0.0
        head = 0.0 if a == 0.0 else a**k * float(self.tail(side, a))
        end = b**k * float(self.tail(side, b)) if math.isfinite(b) else 0.0
        body = self.tail_moment(side, a, b, k - 1)
        if math.isinf(body):
            return math.inf
        return max(head - end + k * body, 0.0)

    def sample_jumps(self, side: str, eps: float, size: int, rng: np.random.Generator) -> np.ndarray:
        """Jump magnitudes drawn from Π restricted to {|x| > eps} on ``side``."""
        top = float(self.tail(side, eps))
        if size == 0 or top == 0:
            return np.empty(0)
        v = rng.random(size) * top
        return self._inverse_tail(side, eps, v)

    def _inverse_tail(self, side, eps, v):
        # smallest x > eps with tail(x) <= v, by bisection in log space
        hi_bound = self.support_bound(side)
        hi = np.full(v.shape, hi_bound if math.isfinite(hi_bound) else max(1.0, 2 * eps))
        if not math.isfinite(hi_bound):
            for _ in range(200):
                above = self.tail(side, hi) > v
                if not np.any(above):
                    break
                hi = np.where(above, hi * 2, hi)
        lo = np.full(v.shape, eps)
        for _ in range(80):
            mid = np.sqrt(lo * hi)
            big = np.asarray(self.tail(side, mid)) > v
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        return hi


def _log_quad(f: Callable[[float], float], a: float, b: float) -> float:
    """Integral of f over [a, b] (a > 0) after the substitution s = exp(u)."""
    return integrate.quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(a), math.log(b), limit=200)[0]


@dataclass(frozen=True)
class ZeroMeasure(LevyMeasure):
    variant = "zero"

    def tail(self, side, x):
        _check_side(side)
        arr = _check_positive(x)
        return np.zeros_like(arr) if arr.ndim else 0.0

    def activity(self, side):
        _check_side(side)
        return Activity.ZERO

    def small_jump_integrable(self, side, p):
        return True

    def support_bound(self, side):
        return 0.0

    def tail_moment(self, side, a, b, p):
        return 0.0

    def to_dict(self):
        return {"variant": self.variant}


@dataclass(frozen=True)
class PowerLawTails(LevyMeasure):
    """Exact power tails truncated at 1.

    tail(-, x) = c_minus * x**-alpha and tail(+, x) = c_plus * x**-beta for
    0 < x < 1, both zero from 1 on. The drop at 1 is an atom of mass c at
    +-1; for beta = 0 that atom is the whole positive side.
    """

    alpha: float
    beta: float
    c_minus: float = 1.0
    c_plus: float = 1.0
    variant = "power_law"

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v < 2.0:
                raise ValueError(f"{name} must lie in [0, 2), got {v}")
        if self.c_minus <= 0:
            raise ValueError("c_minus must be positive")
        if self.c_plus < 0:
            raise ValueError("c_plus must be nonnegative")

    def _params(self, side):
        _check_side(side)
        return (self.c_plus, self.beta) if side == PLUS else (self.c_minus, self.alpha)

    def tail(self, side, x):
        c, e = self._params(side)
        arr = _check_positive(x)
        with np.errstate(over="ignore"):
            out = np.where(arr < 1.0, c * arr ** (-e), 0.0)
        return out if arr.ndim else float(out)

    def activity(self, side):
        c, e = self._params(side)
        if c == 0:
            return Activity.ZERO
        return Activity.INFINITE if e > 0 else Activity.FINITE

    def _finite_mass(self, side):
        return self._params(side)[0]

    def small_jump_integrable(self, side, p):
        c, e = self._params(side)
        return c == 0 or p - e > -1

    def support_bound(self, side):
        return 1.0 if self._params(side)[0] > 0 else 0.0

    def breakpoints(self, side):
        return np.array([1.0])

    def tail_moment(self, side, a, b, p):
        c, e = self._params(side)
        return _power_integral(c, p - e, a, min(b, 1.0)) if a < 1.0 else 0.0

    def tail_moment_vec(self, side, a, b, p):
        c, e = self._params(side)
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.minimum(np.asarray(b, dtype=float), 1.0))
        if c == 0:
            return np.zeros(a.shape)
        q = p - e + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            if q == 0:
                out = c * np.log(b / a)
            else:
                out = c * (b**q - a**q) / q
        out = np.where(b > a, out, 0.0)
        return np.where((a == 0) & (q <= 0) & (b > 0), np.inf, out)

    def sample_jumps(self, side, eps, size, rng):
        c, e = self._params(side)
        if size == 0 or c == 0 or eps >= 1.0:
            return np.empty(0)
        if e == 0:
            return np.ones(size)
        v = rng.random(size)
        # tail(x)/tail(eps) = (x/eps)**-e below 1, atom at 1 absorbs the rest
        return np.minimum(eps * v ** (-1.0 / e), 1.0)

    def to_dict(self):
        return {"variant": self.variant, "alpha": self.alpha, "beta": self.beta,
                "c_minus": self.c_minus, "c_plus": self.c_plus}


@dataclass(frozen=True)
class OneSidedStable(LevyMeasure):
    """Lévy measure of the stable subordinator with Laplace exponent λ**rho."""

    rho: float
    variant = "stable_subordinator"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    @property
    def scale(self) -> float:
        return 1.0 / special.gamma(1.0 - self.rho)

    def tail(self, side, x):
        _check_side(side)
        arr = _check_positive(x)
        out = self.scale * arr ** (-self.rho) if side == PLUS else np.zeros_like(arr)
        return out if arr.ndim else float(out)

    def activity(self, side):
        _check_side(side)
        return Activity.INFINITE if side == PLUS else Activity.ZERO

    def small_jump_integrable(self, side, p):
        return side == MINUS or p - self.rho > -1

    def support_bound(self, side):
        return math.inf if side == PLUS else 0.0

    def tail_moment(self, side, a, b, p):
        if side == MINUS:
            return 0.0
        if math.isinf(b):
            return math.inf if p - self.rho >= -1 else self.scale * a ** (p - self.rho + 1) / (self.rho - p - 1)
        return _power_integral(self.scale, p - self.rho, a, b)

    def sample_jumps(self, side, eps, size, rng):
        if side == MINUS or size == 0:
            return np.empty(0)
        return eps * rng.random(size) ** (-1.0 / self.rho)

    def to_dict(self):
        return {"variant": self.variant, "rho": self.rho}


# Jump laws for finite-activity measures: each maps to a scipy distribution.
_JUMP_LAWS: dict[str, Callable[..., Any]] = {
    "atom": lambda loc: stats.uniform(loc=loc, scale=0.0),
    "uniform": lambda low, high: stats.uniform(loc=low, scale=high - low),
    "normal": lambda loc, scale: stats.norm(loc=loc, scale=scale),
}


@dataclass(frozen=True)
class FiniteActivity(LevyMeasure):
    """Compound-Poisson jumps: ``rate`` times a named jump law.

    Supported laws: ``atom`` (loc), ``uniform`` (low, high), ``normal``
    (loc, scale). The law must put no mass at 0.
    """

    rate: float
    law: str = "atom"
    params: dict = field(default_factory=lambda: {"loc": 1.0})
    variant = "finite_activity"

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if self.law not in _JUMP_LAWS:
            raise ValueError(f"unknown jump law {self.law!r}; choose from {sorted(_JUMP_LAWS)}")
        if self.law == "atom" and self.params.get("loc", 0.0) == 0.0:
            raise ValueError("atom jump law needs a nonzero location")
        if self.law == "uniform" and not self.params["low"] < self.params["high"]:
            raise ValueError("uniform jump law needs low < high")

    def __hash__(self):
        return hash((self.rate, self.law, tuple(sorted(self.params.items()))))

    def _atom_loc(self):
        return self.params["loc"] if self.law == "atom" else None

    def _side_prob(self, side):
        loc = self._atom_loc()
        if loc is not None:
            return float((loc > 0) == (side == PLUS))
        d = _JUMP_LAWS[self.law](**self.params)
        return float(d.sf(0.0) if side == PLUS else d.cdf(0.0))

    def tail(self, side, x):
        _check_side(side)
        arr = _check_positive(x)
        loc = self._atom_loc()
        if loc is not None:
            hit = (loc > arr) if side == PLUS else (-loc > arr)
            out = self.rate * hit.astype(float)
        else:
            d = _JUMP_LAWS[self.law](**self.params)
            out = self.rate * (d.sf(arr) if side == PLUS else d.cdf(-arr))
            out = np.where(out > 0, out, 0.0)
        return out if arr.ndim else float(out)

    def activity(self, side):
        _check_side(side)
        return Activity.FINITE if self.rate * self._side_prob(side) > 0 else Activity.ZERO

    def _finite_mass(self, side):
        return self.rate * self._side_prob(side)

    def small_jump_integrable(self, side, p):
        return p > -1 or self.activity(side) is Activity.ZERO

    def support_bound(self, side):
        if self.activity(side) is Activity.ZERO:
            return 0.0
        if self.law == "atom":
            return abs(self.params["loc"])
        if self.law == "uniform":
            return self.params["high"] if side == PLUS else -self.params["low"]
        return math.inf

    def breakpoints(self, side):
        if self.law == "atom":
            return np.array([abs(self.params["loc"])])
        if self.law == "uniform":
            return np.abs([self.params["low"], self.params["high"]])
        return np.empty(0)

    def sample_jumps(self, side, eps, size, rng):
        loc = self._atom_loc()
        if loc is not None:
            if size == 0 or abs(loc) <= eps or self.tail(side, eps) == 0:
                return np.empty(0)
            return np.full(size, abs(loc))
        if size == 0:
            return np.empty(0)
        d = _JUMP_LAWS[self.law](**self.params)
        # conditional inversion on {x > eps} or {x < -eps}
        if side == PLUS:
            return d.isf(rng.random(size) * d.sf(eps))
        return -d.ppf(rng.random(size) * d.cdf(-eps))

    def to_dict(self):
        return {"variant": self.variant, "rate": self.rate, "law": self.law, "params": dict(self.params)}


@dataclass(frozen=True)
class TabulatedTails(LevyMeasure):
    """Tails given on a grid, interpolated linearly in log-log coordinates.

    Beyond the last grid point both tails vanish. Below the first grid point
    each tail is continued as the power law through its first two grid
    values; questions about behaviour at 0+ are refused when that fitted
    exponent sits within ``EXPONENT_MARGIN`` of a decision threshold.
    """

    grid: tuple
    tail_plus: tuple
    tail_minus: tuple
    variant = "tabulated"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or len(g) < 2 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be at least two increasing positive reals")
        for name in ("tail_plus", "tail_minus"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != g.shape:
                raise ValueError(f"{name} must match the grid length")
            if np.any(v < 0) or np.any(np.diff(v) > 0):
                raise ValueError(f"{name} must be nonnegative and nonincreasing")
        object.__setattr__(self, "grid", tuple(map(float, g)))
        object.__setattr__(self, "tail_plus", tuple(map(float, self.tail_plus)))
        object.__setattr__(self, "tail_minus", tuple(map(float, self.tail_minus)))

    def _values(self, side):
        _check_side(side)
        return np.asarray(self.tail_plus if side == PLUS else self.tail_minus)

    def head_exponent(self, side: str) -> float:
        """Exponent e of the power law c * x**-e through the first two points."""
        v = self._values(side)
        g = np.asarray(self.grid)
        if v[0] == 0:
            return 0.0
        if v[1] == 0:
            raise IndeterminateError("tail vanishes at the second grid point; cannot extrapolate to 0+")
        return float(-math.log(v[1] / v[0]) / math.log(g[1] / g[0]))

    def tail(self, side, x):
        v = self._values(side)
        arr = _check_positive(x)
        g = np.asarray(self.grid)
        flat = np.atleast_1d(arr)
        out = np.zeros_like(flat)
        # right-continuity: on [g_i, g_{i+1}) interpolate, tie at g_i takes g_i's value
        idx = np.searchsorted(g, flat, side="right") - 1
        inner = (idx >= 0) & (idx < len(g) - 1)
        i = idx[inner]
        lo, hi = v[i], v[i + 1]
        pos = lo > 0
        val = np.where(pos & (hi > 0),
                       np.exp(np.log(np.where(pos, lo, 1.0))
                              + (np.log(flat[inner]) - np.log(g[i])) / (np.log(g[i + 1]) - np.log(g[i]))
                              * (np.log(np.where(hi > 0, hi, 1.0)) - np.log(np.where(pos, lo, 1.0)))),
                       lo)
        out[inner] = val
        out[idx == len(g) - 1] = np.where(flat[idx == len(g) - 1] == g[-1], v[-1], 0.0)
        head = idx < 0
        if np.any(head) and v[0] > 0:
            e = self.head_exponent(side)
            with np.errstate(over="ignore"):
                out[head] = v[0] * (flat[head] / g[0]) ** (-e)
        out = out.reshape(arr.shape)
        return out if arr.ndim else float(out)

    def _segments(self, side):
        """Per grid segment: power law c * s**-e reproducing the interpolation."""
        v = self._values(side)
        g = np.asarray(self.grid)
        lo, hi = v[:-1], v[1:]
        both = (lo > 0) & (hi > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.where(both, -np.log(np.where(both, hi / np.where(lo > 0, lo, 1.0), 1.0)) / np.log(g[1:] / g[:-1]), 0.0)
        c = lo * g[:-1] ** e
        return c, e

    def _upper_integral(self, side, x, p):
        """∫_x^top s**p tail(s) ds for x >= 0, vectorized."""
        g = np.asarray(self.grid)
        c, e = self._segments(side)
        seg = np.array([_power_integral(ci, p - ei, a, b) for ci, ei, a, b in zip(c, e, g[:-1], g[1:])])
        after = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # after[i] = ∫_{g_i}^{top}
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        idx = np.searchsorted(g, x, side="right") - 1
        inner = (idx >= 0) & (idx < len(g) - 1)
        i = idx[inner]
        xi = x[inner]
        q = p - e[i] + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            part = np.where(q == 0, c[i] * np.log(g[i + 1] / xi), c[i] * (g[i + 1] ** q - xi**q) / np.where(q == 0, 1.0, q))
        out[inner] = part + after[i + 1]
        head = idx < 0
        if np.any(head):
            v0 = self._values(side)[0]
            if v0 == 0:
                out[head] = after[0]
            else:
                eh = self.head_exponent(side)
                ch = v0 * g[0] ** eh
                qh = p - eh + 1.0
                xh = x[head]
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    if qh == 0:
                        hp = ch * np.log(g[0] / xh)
                    else:
                        hp = ch * (g[0] ** qh - xh**qh) / qh
                    if qh <= 0:
                        hp = np.where(xh == 0, np.inf, hp)
                out[head] = hp + after[0]
        return out

    def tail_moment_vec(self, side, a, b, p):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        zero = (a == 0) & (b > 0)
        if np.any(zero) and self.small_jump_integrable(side, p):
            zero = np.zeros(a.shape, dtype=bool)
        with np.errstate(invalid="ignore"):
            out = self._upper_integral(side, a, p) - self._upper_integral(side, b, p)
        out = np.where(b > a, out, 0.0)
        return np.where(zero, np.inf, out)

    def tail_moment(self, side, a, b, p):
        return float(self.tail_moment_vec(side, a, b, p))

    def activity(self, side):
        v = self._values(side)
        if v[0] == 0:
            return Activity.ZERO
        e = self.head_exponent(side)
        if e >= EXPONENT_MARGIN:
            return Activity.INFINITE
        raise IndeterminateError(
            f"{side} tail is flat near the first grid point (fitted exponent {e:.3g}); "
            "finite or infinite activity cannot be told apart on this grid")

    def small_jump_integrable(self, side, p):
        v = self._values(side)
        if v[0] == 0:
            return True
        margin = p - self.head_exponent(side) + 1
        if abs(margin) < EXPONENT_MARGIN:
            raise IndeterminateError(f"tabulated {side} tail too close to the integrability threshold")
        return margin > 0

    def support_bound(self, side):
        v = self._values(side)
        nz = np.nonzero(v)[0]
        return 0.0 if len(nz) == 0 else self.grid[-1]

    def breakpoints(self, side):
        return np.asarray(self.grid)

    def to_dict(self):
        return {"variant": self.variant, "grid": list(self.grid),
                "tail_plus": list(self.tail_plus), "tail_minus": list(self.tail_minus)}


@dataclass(frozen=True)
class OneSided(LevyMeasure):
    """Keeps one side of ``inner`` and zeroes the other."""

    inner: LevyMeasure
    keep: str
    variant = "one_sided"

    def __post_init__(self):
        _check_side(self.keep)

    def tail(self, side, x):
        _check_side(side)
        if side == self.keep:
            return self.inner.tail(side, x)
        arr = _check_positive(x)
        return np.zeros_like(arr) if arr.ndim else 0.0

    def activity(self, side):
        return self.inner.activity(side) if side == self.keep else Activity.ZERO

    def _finite_mass(self, side):
        return self.inner._finite_mass(side)

    def small_jump_integrable(self, side, p):
        return self.inner.small_jump_integrable(side, p) if side == self.keep else True

    def support_bound(self, side):
        return self.inner.support_bound(side) if side == self.keep else 0.0

    def breakpoints(self, side):
        return self.inner.breakpoints(side)

    def tail_moment(self, side, a, b, p):
        return self.inner.tail_moment(side, a, b, p) if side == self.keep else 0.0

    def sample_jumps(self, side, eps, size, rng):
        return self.inner.sample_jumps(side, eps, size, rng) if side == self.keep else np.empty(0)

    def to_dict(self):
        name = "spectrally_positive" if self.keep == PLUS else "spectrally_negative"
        return {"variant": name, "inner": self.inner.to_dict()}


def spectrally_positive(inner: LevyMeasure) -> OneSided:
    return OneSided(inner, PLUS)


def spectrally_negative(inner: LevyMeasure) -> OneSided:
    return OneSided(inner, MINUS)


@dataclass(frozen=True)
class SumMeasure(LevyMeasure):
    """Superposition of independent jump components."""

    parts: tuple
    variant = "sum"

    def __post_init__(self):
        if not self.parts:
            raise ValueError("SumMeasure needs at least one component")
        object.__setattr__(self, "parts", tuple(self.parts))

    def tail(self, side, x):
        return sum(p.tail(side, x) for p in self.parts)

    def activity(self, side):
        acts = [p.activity(side) for p in self.parts]
        if Activity.INFINITE in acts:
            return Activity.INFINITE
        return Activity.FINITE if Activity.FINITE in acts else Activity.ZERO

    def _finite_mass(self, side):
        return sum(p.mass(side) for p in self.parts)

    def small_jump_integrable(self, side, p):
        return all(q.small_jump_integrable(side, p) for q in self.parts)

    def support_bound(self, side):
        return max(p.support_bound(side) for p in self.parts)

    def breakpoints(self, side):
        return np.unique(np.concatenate([p.breakpoints(side) for p in self.parts]))

    def tail_moment(self, side, a, b, p):
        return sum(q.tail_moment(side, a, b, p) for q in self.parts)

    def sample_jumps(self, side, eps, size, rng):
        if size == 0:
            return np.empty(0)
        weights = np.array([float(p.tail(side, eps)) for p in self.parts])
        if weights.sum() == 0:
            return np.empty(0)
        counts = rng.multinomial(size, weights / weights.sum())
        out = np.concatenate([p.sample_jumps(side, eps, int(n), rng) for p, n in zip(self.parts, counts)])
        return rng.permutation(out)

    def to_dict(self):
        return {"variant": self.variant, "parts": [p.to_dict() for p in self.parts]}


def measure_from_dict(d: dict) -> LevyMeasure:
    """Inverse of ``to_dict``; unknown variants and fields are rejected."""
    if not isinstance(d, dict) or "variant" not in d:
        raise ValueError("measure specification needs a 'variant' field")
    d = dict(d)
    variant = d.pop("variant")
    simple = {"zero": ZeroMeasure, "power_law": PowerLawTails, "stable_subordinator": OneSidedStable,
              "finite_activity": FiniteActivity, "tabulated": TabulatedTails}
    if variant in simple:
        cls = simple[variant]
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unknown fields for {variant}: {sorted(extra)}")
        if variant == "tabulated":
            d = {k: tuple(v) for k, v in d.items()}
        return cls(**d)
    if variant in ("spectrally_positive", "spectrally_negative"):
        if set(d) != {"inner"}:
            raise ValueError(f"{variant} takes exactly one field 'inner'")
        inner = measure_from_dict(d["inner"])
        return spectrally_positive(inner) if variant == "spectrally_positive" else spectrally_negative(inner)
    if variant == "sum":
        if set(d) != {"parts"}:
            raise ValueError("sum takes exactly one field 'parts'")
        return SumMeasure(tuple(measure_from_dict(p) for p in d["parts"]))
    raise ValueError(f"unknown measure variant {variant!r}")


@dataclass(frozen=True)
class LevyTriplet:
    """Centering drift ``gamma`` (jumps truncated at |x| > 1), Gaussian
    coefficient ``sigma`` and jump measure."""

    gamma: float
    sigma: float
    measure: LevyMeasure = field(default_factory=ZeroMeasure)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def to_dict(self):
        return {"gamma": self.gamma, "sigma": self.sigma, "measure": self.measure.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "LevyTriplet":
        extra = set(d) - {"gamma", "sigma", "measure"}
        if extra:
            raise ValueError(f"unknown triplet fields: {sorted(extra)}")
        m = measure_from_dict(d["measure"]) if "measure" in d else ZeroMeasure()
        return cls(float(d.get("gamma", 0.0)), float(d.get("sigma", 0.0)), m)


@dataclass(frozen=True)
class IntegrabilityReport:
    total: Activity
    plus: Activity
    minus: Activity
    mass_plus: float
    mass_minus: float
    first_moment_finite: bool

    def to_dict(self):
        return {"total": self.total.value, "plus": self.plus.value, "minus": self.minus.value,
                "mass_plus": self.mass_plus, "mass_minus": self.mass_minus,
                "first_moment_finite": self.first_moment_finite}


@dataclass(frozen=True)
class VariationClass:
    bounded: bool
    b: float | None
    plus_side: Activity
    minus_side: Activity

    @property
    def kind(self) -> str:
        return "bounded" if self.bounded else "unbounded"

    def to_dict(self):
        return {"kind": self.kind, "b": self.b, "plus_side": self.plus_side.value,
                "minus_side": self.minus_side.value}


def tail(spec: LevyMeasure, side: str, x):
    """Π((x, ∞)) for side 'plus', Π((-∞, -x)) for side 'minus'."""
    return spec.tail(side, x)


def integrability_report(spec: LevyMeasure) -> IntegrabilityReport:
    plus, minus = spec.activity(PLUS), spec.activity(MINUS)
    if Activity.INFINITE in (plus, minus):
        total = Activity.INFINITE
    elif Activity.FINITE in (plus, minus):
        total = Activity.FINITE
    else:
        total = Activity.ZERO
    first = all(spec.small_jump_integrable(s, 0.0) for s in SIDES)
    return IntegrabilityReport(total, plus, minus, spec.mass(PLUS), spec.mass(MINUS), first)


def small_jump_drift(spec: LevyMeasure) -> float:
    """Signed integral of x over 0 < |x| <= 1 (finite sides only)."""
    return spec.jump_moment(PLUS, 0.0, 1.0, 1) - spec.jump_moment(MINUS, 0.0, 1.0, 1)


def classify_variation(t: LevyTriplet) -> VariationClass:
    rep = integrability_report(t.measure)
    bounded = t.sigma == 0 and rep.first_moment_finite
    b = t.gamma - small_jump_drift(t.measure) if bounded else None
    return VariationClass(bounded, b, rep.plus, rep.minus)


def second_moment_on_grid(spec: LevyMeasure, points_per_decade: int = 20, decades: int = 12) -> float:
    """Log-grid estimate of the integral of (1 ∧ x²) Π(dx).

    Each cell (x_i, x_{i+1}] contributes its mass times x_i * x_{i+1}; the
    part of the measure below 10**-decades is ignored, so the estimate
    converges as the grid is refined and extended.
    """
    x = np.logspace(-decades, 0.0, decades * points_per_decade + 1)
    total = 0.0
    for side in SIDES:
        t = np.asarray(spec.tail(side, x), dtype=float)
        # tail(1) counts |x| > 1; the left limit at 1 picks up an atom sitting at 1
        t_left = float(spec.tail(side, 1.0 - 1e-12))
        t = t.copy()
        t[-1] = t_left
        total += float(np.sum((t[:-1] - t[1:]) * x[:-1] * x[1:]))
        total += t_left
    return total
