"""Exchangeable-pair Stein machinery and Monte Carlo checks of non-uniform Berry-Esseen bounds."""

from .limitdist import (BaseLaw, GFunction, LimitDistribution, build_cw_limit,
                        check_conditions, classify_type, normalize, standard_normal)
from .steinsolve import SteinSolution, stein_bound_fz, stein_f, stein_fprime
from .paircore import (BoundEstimate, PairModel, empirical_error_profile,
                       estimate_bound_terms, exchangeability_check, rate_summary)
from .quadform import QuadFormModel, tridiagonal
from .curieweiss import CurieWeissModel
from .indeptest import IndepModel, analyze_data
from .experiment import ExperimentConfig, preset_config, run_experiment

__version__ = "0.1.0"

__all__ = [
    "BaseLaw", "GFunction", "LimitDistribution", "build_cw_limit", "check_conditions",
    "classify_type", "normalize", "standard_normal",
    "SteinSolution", "stein_bound_fz", "stein_f", "stein_fprime",
    "BoundEstimate", "PairModel", "empirical_error_profile", "estimate_bound_terms",
    "exchangeability_check", "rate_summary",
    "QuadFormModel", "tridiagonal", "CurieWeissModel", "IndepModel", "analyze_data",
    "ExperimentConfig", "preset_config", "run_experiment",
]
