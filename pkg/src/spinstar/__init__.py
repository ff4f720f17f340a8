"""Reduced dynamics of a central spin coupled to a spin bath through an intermediate spin.

Four mutually checking solvers share one model definition:

* :mod:`spinstar.exact` - closed-form evolution operator summed over bath sectors,
* :mod:`spinstar.thermo` - infinite-bath closed form,
* :mod:`spinstar.tcl2` - second-order time-convolutionless master equations,
* :mod:`spinstar.oracle` - brute-force block and dense exponentiation.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BathTooLarge,
    ConfigError,
    DegenerateAlpha,
    DegenerateInput,
    NonConvergent,
    SingularSector,
    SolverError,
    SpinStarError,
    StepTooLarge,
)
from .model import ModelParams, XState, build_state  # noqa: E402

__all__ = [
    "BathTooLarge",
    "ConfigError",
    "DegenerateAlpha",
    "DegenerateInput",
    "ModelParams",
    "NonConvergent",
    "SingularSector",
    "SolverError",
    "SpinStarError",
    "StepTooLarge",
    "XState",
    "build_state",
    "__version__",
]
