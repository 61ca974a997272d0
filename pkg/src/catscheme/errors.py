"""Exception hierarchy shared by all modules."""


class CatSchemeError(Exception):
    pass


class InputError(CatSchemeError, ValueError):
    """Invalid user-supplied data or arguments."""


class FitError(CatSchemeError, ValueError):
    """A statistical fit could not be produced."""


class NumericError(CatSchemeError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class DomainError(CatSchemeError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class ConsistencyError(CatSchemeError, RuntimeError):
    """Internally computed quantities disagree with each other."""
