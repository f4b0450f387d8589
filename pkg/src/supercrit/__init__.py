"""Numerical lab for radial supercritical semilinear problems in the unit disc.

The growth model f = exp(g) is described by :mod:`supercrit.growth`; the
recurrence and limit profiles live in :mod:`supercrit.recurrence` and
:mod:`supercrit.profiles`; shots, diagrams and the singular solution in
:mod:`supercrit.shooting`, :mod:`supercrit.diagram` and :mod:`supercrit.singular`.
"""
__version__ = "0.1.0"

from .errors import (DomainError, HorizonError, MatchingError, NumericalError,
                     PrecisionError, SupercritError)
from .growth import (GrowthModel, classify, custom, exp_poly, iter_exp, power_exp,
                     pure_exp)
from .recurrence import build_table
from .profiles import profile_from_table
from .shooting import SolverConfig, integrate, integrate_outward, rescale_to_disc
from .analysis import count_intersections, detect_bumps, verify_shot
from .singular import (b_functionals, big_F, big_F_inv, build_approx, check_condition_C,
                       extend, matching_radius)
from .diagram import mu_grid, oscillation_summary, trace, turning_points

__all__ = [
    "__version__",
    "SupercritError", "DomainError", "NumericalError", "HorizonError", "PrecisionError",
    "MatchingError",
    "GrowthModel", "classify", "custom", "exp_poly", "iter_exp", "power_exp", "pure_exp",
    "build_table", "profile_from_table",
    "SolverConfig", "integrate", "integrate_outward", "rescale_to_disc",
    "count_intersections", "detect_bumps", "verify_shot",
    "b_functionals", "big_F", "big_F_inv", "build_approx", "check_condition_C", "extend",
    "matching_radius",
    "mu_grid", "oscillation_summary", "trace", "turning_points",
]
