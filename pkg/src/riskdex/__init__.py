"""riskdex: investment decision functions, risk indices and their short-horizon limits."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CARA, CRRA, Agent, DecisionValue, Discrete, Empirical, Gamble, Log, Normal, Quadratic,
    ShiftedLogNormal, Tabulated, arrow_pratt_absolute, arrow_pratt_relative, gamble_moments,
)
from .decisions import (  # noqa: E402
    SolverConfig, f_ar, f_ar_m, f_ca, f_ca_m, f_ce, f_ce_m, f_rp, f_rp_m, f_sce,
)
from .expectation import IntegrationPolicy, expected_utility, expected_utility_dalpha  # noqa: E402

__all__ = [
    "__version__", "CARA", "CRRA", "Agent", "DecisionValue", "Discrete", "Empirical", "Gamble",
    "Log", "Normal", "Quadratic", "ShiftedLogNormal", "Tabulated", "arrow_pratt_absolute",
    "arrow_pratt_relative", "gamble_moments", "SolverConfig", "f_ar", "f_ar_m", "f_ca", "f_ca_m",
    "f_ce", "f_ce_m", "f_rp", "f_rp_m", "f_sce", "IntegrationPolicy", "expected_utility",
    "expected_utility_dalpha",
]
