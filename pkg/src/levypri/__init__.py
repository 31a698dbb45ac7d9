"""Partial right inverses of Lévy processes: integral criteria, ladder
renewal numerics and Monte Carlo checks of the dyadic construction."""

__version__ = "0.1.0"

from .measures import (  # noqa: E402
    MINUS, PLUS, Activity, FiniteActivity, IndeterminateError, LevyTriplet, OneSidedStable,
    PowerLawTails, SumMeasure, TabulatedTails, VariationClass, ZeroMeasure, classify_variation,
    integrability_report, measure_from_dict, spectrally_negative, spectrally_positive, tail,
)
from .criteria import (  # noqa: E402
    Answer, PriCase, QuadConfig, Status, corollary_decision, criterion_report, decide_pri,
    denominator_D, evaluate_J, evaluate_L,
)
from .ladder import (  # noqa: E402
    RenewalConfig, RenewalFunction, SubordinatorSpec, amicale_integree_residual, convolution_square,
    erickson_envelope, evaluate_I, renewal_function, vigon_upward_tail,
)
from .simulate import (  # noqa: E402
    SimConfig, dyadic_inverse, estimate_hit_functional, estimate_hit_functionals,
    estimate_pri_existence, first_passage_above, overshoot_survival, simulate_path,
)
