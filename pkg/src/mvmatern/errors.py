"""
Exception hierarchy. Every error carries a short machine-readable ``code``
which the CLI prints next to the human message.
"""
from typing import Any, List, Optional


class MaternError(Exception):
    code = "E_MATERN"


class SpecialFunctionDomainError(MaternError, ValueError):
    code = "E_DOMAIN"


class PoleError(SpecialFunctionDomainError):
    code = "E_POLE"


class SpecialFunctionOverflowError(MaternError, ArithmeticError):
    code = "E_OVERFLOW"


class ConvergenceError(MaternError, ArithmeticError):
    code = "E_CONVERGENCE"


class ModelValidationError(MaternError, ValueError):
    code = "E_MODEL"

    def __init__(self, violations: List[str], context: Optional[str] = None):
        self.violations = list(violations)
        prefix = f"{context}: " if context else ""
        super().__init__(prefix + "; ".join(self.violations))


class BackendUnavailableError(MaternError):
    code = "E_BACKEND"


class FactorizationError(MaternError, ArithmeticError):
    code = "E_FACTORIZATION"


class DatasetError(MaternError):
    code = "E_DATA"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelConfigError(MaternError, ValueError):
    code = "E_CONFIG"

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message)


class FitError(MaternError):
    code = "E_FIT"

    def __init__(self, message: str, diagnostics: Optional[List[Any]] = None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)
