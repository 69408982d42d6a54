"""Exception types shared across the package."""


class NatGaloreError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(NatGaloreError, ValueError):
    """Operands have incompatible or invalid shapes."""


class NumericalError(NatGaloreError):
    """An iterative or direct numerical procedure failed.

    Carries optional context (iteration count, offending value) in
    ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class NotPositiveDefiniteError(NumericalError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index):
        super().__init__(
            f"matrix is not positive definite (pivot {pivot_index} <= 0)",
            pivot_index=pivot_index,
        )
        self.pivot_index = pivot_index


class CheckpointError(NatGaloreError):
    """Checkpoint file is missing, corrupt, or of an unsupported version."""
