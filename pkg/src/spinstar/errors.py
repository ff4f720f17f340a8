"""Exception hierarchy shared by the solvers and the command line."""


class SpinStarError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SpinStarError, ValueError):
    """Invalid user input: parameters, states or run configuration."""


class DegenerateInput(ConfigError):
    """Input for which the requested object does not exist (e.g. an empty bath)."""


class SolverError(SpinStarError, RuntimeError):
    """A solver could not produce a trustworthy result."""


class SingularSector(SolverError):
    """The closed-form evolution operator is ill-posed in this sector."""


class NonConvergent(SolverError):
    """A series did not reach the requested tolerance."""


class DegenerateAlpha(SolverError):
    """Thermodynamic-limit functions requested at zero bath coupling."""


class StepTooLarge(SolverError):
    """Integrator drift exceeded the conservation budget."""


class BathTooLarge(SolverError):
    """Dense Hilbert-space evolution requested for too many bath spins."""
