"""Exception hierarchy shared across the package.

Contract violations (bad shapes, points outside a generator's domain,
malformed configs) raise ValueError subclasses; failures of a numerical
procedure that received well-formed inputs raise NumericalError subclasses.
The CLI maps ConfigError/usage problems to exit code 1 and NumericalError
to exit code 2.
"""


class SellaError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SellaError, ValueError):
    """Malformed configuration or problem file."""


class NumericalError(SellaError, RuntimeError):
    """A numerical procedure failed on well-formed inputs."""


class ProxError(NumericalError):
    """Proximal subproblem could not be solved to tolerance."""


class DivergenceError(NumericalError):
    """Iteration diverged past the residual guard."""


class ScheduleError(NumericalError):
    """No valid contractive step-size schedule exists for the inputs."""


class GrowthError(NumericalError):
    """Growth-moduli computation failed (e.g. kernel inclusion violated)."""


class SolveError(NumericalError):
    """Solution-set computation failed (inconsistent or budget exceeded)."""
