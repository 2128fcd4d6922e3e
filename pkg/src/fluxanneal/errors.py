"""Exception hierarchy shared by all fluxanneal modules."""


class FluxannealError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(FluxannealError, ValueError):
    """An argument broke a documented precondition (shape, range, symmetry)."""


class DivergenceError(FluxannealError, FloatingPointError):
    """The MD integrator produced non-finite fluxes or momenta."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite flux or momentum detected by step {step}")


class CapacityError(FluxannealError):
    """A problem exceeds what a backend is able to handle."""


class RemoteError(FluxannealError):
    """Base class for failures of the remote annealer client."""


class RemoteTransportError(RemoteError):
    """Connection refused, reset, or an HTTP error status."""


class RemoteTimeoutError(RemoteError):
    """The remote did not answer within the configured timeout."""


class MalformedResponseError(RemoteError):
    """The remote answered, but the payload violates the wire protocol."""


class RemoteCapacityError(RemoteError, CapacityError):
    """The remote rejected the problem as too large."""
