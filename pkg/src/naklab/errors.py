"""Exception types shared across the package.

ParameterError means the caller handed us values outside the model's domain
(negative rates, probabilities outside [0,1], ...).  DomainError and its
subclasses mean the computation itself cannot proceed or converge; the CLI
maps ParameterError to exit code 1 and DomainError to exit code 2.
"""


class ParameterError(ValueError):
    """Invalid input parameter (bad rate, probability, grid spec, ...)."""


class DomainError(Exception):
    """Requested quantity is undefined or unreachable for these parameters."""


class PoleError(DomainError):
    """Generating-function evaluation at or beyond its radius of convergence."""


class AccuracyError(DomainError):
    """A numeric routine could not reach its stated tolerance."""


class SearchExhaustedError(DomainError):
    """A bounded search (depth scan, bisection bracket) hit its cap."""


class InfeasibleError(DomainError):
    """Optimization problem has an empty feasible set."""
