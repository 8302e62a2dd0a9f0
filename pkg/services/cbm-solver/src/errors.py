"""
Exceptions raised by the CBM solver
Each carries an error code used in the machine-readable error documents
"""

from typing import Any, Dict, Optional


class CBMSolverError(Exception):
    """Base class for all solver errors"""

    error_code = "SOLVER_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class InvalidStateError(CBMSolverError):
    """State or index outside the enumerated state space"""

    error_code = "INVALID_STATE"


class InadmissibleActionError(CBMSolverError):
    """Action that cannot be applied in the given state"""

    error_code = "INADMISSIBLE_ACTION"


class StateSpaceTooLargeError(CBMSolverError):
    """Instance too large for exact solution"""

    error_code = "STATE_SPACE_TOO_LARGE"


class ConvergenceError(CBMSolverError):
    """Iterative method hit its iteration cap"""

    error_code = "NOT_CONVERGED"

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message, {"residual": residual, "iterations": iterations})
        self.residual = residual
        self.iterations = iterations


class InstanceGenerationError(CBMSolverError):
    """Coverage constraints could not be met within the resample budget"""

    error_code = "INSTANCE_INFEASIBLE"
