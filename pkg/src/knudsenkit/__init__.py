"""Kinetic-to-fluid toolkit for rarefied gas flows with Maxwell accommodation walls."""
from .collision import CollisionModel
from .config import RunConfig, load_config
from .errors import (ConfigurationError, DegenerateStateError, KnudsenKitError, NumericalError, PreconditionError,
                     StepSizeError)
from .lattice import VelocityLattice
from .slip import AccommodationLaw, BCFamily, SlipCoefficients, WallFrame, boundary_family, compute_slip_coefficients
from .state import FluidFields, KineticDistribution

__version__ = "0.1.0"

__all__ = [
    "AccommodationLaw", "BCFamily", "CollisionModel", "ConfigurationError", "DegenerateStateError", "FluidFields",
    "KineticDistribution", "KnudsenKitError", "NumericalError", "PreconditionError", "RunConfig", "SlipCoefficients",
    "StepSizeError", "VelocityLattice", "WallFrame", "boundary_family", "compute_slip_coefficients", "load_config",
]
