"""Exception hierarchy shared across the package."""


class MTDError(Exception):
    """Base class for all package errors."""


class ParameterError(MTDError, ValueError):
    """A distribution or model parameter lies outside its domain."""


class DomainError(MTDError, ValueError):
    """An argument lies outside the state space or the unit interval."""


class ContractError(MTDError, ValueError):
    """Arguments have inconsistent shapes or lengths."""


class UnsupportedOperation(MTDError, NotImplementedError):
    pass


class NumericalFailure(MTDError, ArithmeticError):
    """Quadrature, root finding or a sampler update broke down."""

    def __init__(self, message, iteration=None, block=None):
        if iteration is not None or block is not None:
            message = f"{message} (iteration={iteration}, block={block})"
        super().__init__(message)
        self.iteration = iteration
        self.block = block
