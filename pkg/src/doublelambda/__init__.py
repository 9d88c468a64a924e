"""Four-level double-Lambda medium: steady state, susceptibilities, propagation."""

from .errors import (
    ConfigError,
    DivergenceError,
    MisuseError,
    NumericalError,
    ResolutionWarning,
    SingularSaturationError,
    SingularSystemError,
    StabilityError,
    TruncationWarning,
    ValidityWarning,
)
from .kernel import BACKEND
from .scheme import MHZ, FieldState, SchemeParams, Topology, na2_hinze
from .densmat import DmSolution, steady_state
from .suscept import SusceptibilitySet, chi_all
from .doppler import VelocityGrid, average_susceptibility, velocity_profile
from .propagate import (
    OpaCoefficients,
    PropagationOptions,
    PropagationTrace,
    analytic_opa,
    fwm_efficiency,
    integrate,
    integrate_constant,
    manley_rowe_report,
    switching_curve,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "MHZ", "ConfigError", "DivergenceError", "MisuseError", "NumericalError", "ResolutionWarning",
    "SingularSaturationError", "SingularSystemError", "StabilityError", "TruncationWarning", "ValidityWarning",
    "FieldState", "SchemeParams", "Topology", "na2_hinze", "DmSolution", "steady_state", "SusceptibilitySet",
    "chi_all", "VelocityGrid", "average_susceptibility", "velocity_profile", "OpaCoefficients",
    "PropagationOptions", "PropagationTrace", "analytic_opa", "fwm_efficiency", "integrate", "integrate_constant",
    "manley_rowe_report", "switching_curve",
]
