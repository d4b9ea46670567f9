"""Exception hierarchy.

Every error carries a short machine code used by the CLI for its exit-code
and error-row contract.
"""


class MultibubbleError(Exception):
    code = "ERROR"


class DomainError(MultibubbleError, ValueError):
    """A point lies outside the region where the evaluator is defined."""

    code = "DOMAIN"


class SingularEvaluationError(MultibubbleError, ValueError):
    """Green's function requested at coincident points."""

    code = "SINGULAR"


class ConfigurationError(MultibubbleError, ValueError):
    code = "CONFIG"


class ParameterError(MultibubbleError, ValueError):
    code = "PARAMETER"


class NotDefinedError(MultibubbleError):
    """Quantity does not exist in the requested dimension."""

    code = "NOT_DEFINED"


class DegeneracyError(MultibubbleError, ArithmeticError):
    """Lowest eigenvalue is not numerically simple."""

    code = "DEGENERATE"


class InfeasibleConfigurationError(MultibubbleError):
    """rho < 0: the configuration cannot be a concentration limit."""

    code = "INFEASIBLE"


class IntegrationError(MultibubbleError, ArithmeticError):
    code = "INTEGRATION"


class SubcriticalParameterError(IntegrationError):
    """The shooting solution has no zero before the radius cap."""

    code = "SUBCRITICAL"


class NoRootError(MultibubbleError, ArithmeticError):
    code = "NO_ROOT"


class SearchFailure(MultibubbleError):
    code = "SEARCH_FAILED"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientDataError(MultibubbleError, ValueError):
    """Too few sweep points for a fit."""

    code = "INSUFFICIENT_DATA"
