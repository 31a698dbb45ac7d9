"""Renewal functions and overshoots of subordinators.

For a stable subordinator with index rho the renewal function is
x^rho / Gamma(1 + rho), and the overshoot over x, divided by x, follows the
generalized arcsine law.  Both are checked against Monte Carlo here.
"""
import math

import numpy as np
from scipy import integrate, special

from levypri.ladder import RenewalConfig, SubordinatorSpec, renewal_function
from levypri.measures import OneSidedStable
from levypri.simulate import SimConfig, overshoot_survival

rho = 0.5
s = SubordinatorSpec(0.0, OneSidedStable(rho))
grid = np.linspace(0.1, 1.0, 5)

U = renewal_function(s, grid, RenewalConfig(n_paths=20_000, epsilon=1e-5, seed=1))
exact = grid**rho / special.gamma(1 + rho)
for x, u, se, e in zip(grid, U.values, U.se, exact):
    print(f"U({x:.2f}) = {u:.4f} +- {se:.4f}   exact {e:.4f}")

ys = np.array([0.1, 0.5, 1.0, 3.0])
o = overshoot_survival(s, SimConfig(n_paths=20_000, epsilon=1e-6), 1.0, ys)
dens = lambda t: math.sin(math.pi * rho) / math.pi * t**-rho / (1 + t)
for y, p, se in zip(ys, o.survival, o.se):
    print(f"P(O(1) > {y}) = {p:.4f} +- {se:.4f}   arcsine {integrate.quad(dens, y, np.inf)[0]:.4f}")
