"""Exception types shared across the package."""


class NumericalError(ValueError):
    """A numeric precondition failed (non-PD matrix, bad conditioning, ...)."""


class NotPositiveDefiniteError(NumericalError):
    """Input required to be positive definite is not."""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"matrix is not positive definite (min eigenvalue "
            f"{self.min_eigenvalue:.6e})")


class UnsupportedDimensionError(NumericalError):
    """Operation not available at the requested matrix dimension."""
