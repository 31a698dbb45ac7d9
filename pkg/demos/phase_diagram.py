"""Phase diagram for power-law Lévy measures.

Negative jumps with tail x^-alpha, positive jumps with tail x^-beta, no
Gaussian part.  A point of increase exists exactly when beta < 2 alpha - 2,
and the process creeps upward when beta < alpha.
"""
import numpy as np

from levypri import LevyTriplet, PowerLawTails, decide_pri
from levypri.criteria import corollary_decision

alphas = np.linspace(1.05, 1.95, 19)
betas = np.linspace(0.05, 1.95, 39)

# each cell is decided numerically from J and compared with the closed form
rows = []
for b in betas[::-1]:
    line = ""
    for a in alphas:
        d = decide_pri(LevyTriplet(0.0, 0.0, PowerLawTails(a, b)))
        c = corollary_decision(a, b)
        mark = {"exists": "#", "not_exists": ".", "indeterminate": "?"}[d.answer.value]
        if abs(b - (2 * a - 2)) < 0.05:
            mark = "~"
        elif d.answer.value != "indeterminate" and (d.answer.value == "exists") != c.pri:
            mark = "!"
        line += mark
    rows.append(f"beta={b:4.2f} {line}")

print("# = point of increase, . = none, ~ = within 0.05 of the boundary, ? = indeterminate, ! = disagreement")
print("\n".join(rows))
print(f"{'':10}alpha {alphas[0]:.2f} .. {alphas[-1]:.2f}")
