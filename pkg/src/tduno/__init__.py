"""Time-dependent concordance and its IPCW-weighted variant for censored survival data."""
from .censoring import StepSurvival, clamp, reverse_km, true_g_discrete
from .concordance import (Decomposition, MetricReport, antolini_ctd, decompose,
                          harrell_fixed_t, population_c, td_uno, uno_fixed_t)
from .survival_core import Cohort, SurvivalMatrix, TimeGrid, discretize, validate

__version__ = "0.1.0"

__all__ = [
    "Cohort",
    "TimeGrid",
    "SurvivalMatrix",
    "StepSurvival",
    "MetricReport",
    "Decomposition",
    "discretize",
    "validate",
    "reverse_km",
    "clamp",
    "true_g_discrete",
    "harrell_fixed_t",
    "uno_fixed_t",
    "antolini_ctd",
    "td_uno",
    "decompose",
    "population_c",
]
