"""How the dyadic band classifier sees J and L.

The integrals are split into bands (2^-k-1, 2^-k].  Convergence is read off
the log2 slope of the band masses; a flat or rising tail means divergence.
"""
import numpy as np

from levypri import LevyTriplet, PowerLawTails
from levypri.criteria import criterion_report

for alpha, beta in [(1.5, 0.5), (1.5, 0.95), (1.2, 1.0), (1.5, 1.6)]:
    rep = criterion_report(LevyTriplet(0.0, 0.0, PowerLawTails(alpha, beta)))
    J, L = rep.J, rep.L
    print(f"alpha={alpha} beta={beta}: {rep.decision.answer.value} [{rep.decision.case.value}]")
    for name, r in (("J", J), ("L", L)):
        tail = np.log2(r.band_masses[-5:])
        print(f"  {name}: {r.status.value:13s} value={r.value:<10.4g} slope exponent={r.local_exponent:+.3f}"
              f"  last log2 masses {np.round(tail, 2)}")

# just inside the boundary the band slope is -0.01, flatter than the -0.02
# tolerance, so J is reported divergent although it converges in exact arithmetic
rep = criterion_report(LevyTriplet(0.0, 0.0, PowerLawTails(1.5, 0.99)))
print(f"boundary case beta=0.99: J {rep.J.status.value}, slope exponent {rep.J.local_exponent:+.3f}")
