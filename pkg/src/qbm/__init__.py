"""Exact and perturbative dynamics of an oscillator coupled to a harmonic bath
in the rotating-wave, one-quantum sector."""

from .errors import (
    CapabilityError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    FitRejectedError,
    PoleError,
    QBMError,
    RegimeWarning,
    ResolutionError,
    SingularPointWarning,
)
from .model import BathSpec, CouplingFunction, ModelConfig, ThermalState, discretize, thermal_state
from .resolvent import ResolventModel
from .spectrum import SpectralDecomposition, decompose

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "CapabilityError",
    "ConfigurationError",
    "ConvergenceError",
    "CouplingFunction",
    "DomainError",
    "FitRejectedError",
    "ModelConfig",
    "PoleError",
    "QBMError",
    "RegimeWarning",
    "ResolutionError",
    "ResolventModel",
    "SingularPointWarning",
    "SpectralDecomposition",
    "ThermalState",
    "decompose",
    "discretize",
    "thermal_state",
]
