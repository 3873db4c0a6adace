"""Exception types raised across the package."""


class Gapped1DError(Exception):
    """Base class for all package errors."""


class ShapeError(Gapped1DError, ValueError):
    """Array or chain shapes are inconsistent."""


class DenseCapError(Gapped1DError, ValueError):
    """A dense (exponential-size) object was requested above the configured cap."""


class NotNormalizedError(Gapped1DError, ValueError):
    """An operation that needs a unit vector received something else."""


class NotHermitianError(Gapped1DError, ValueError):
    pass


class NetTooLargeError(Gapped1DError, ValueError):
    """A full-grid net would exceed the enumeration cap."""

    def __init__(self, predicted: int, cap: int):
        self.predicted = predicted
        self.cap = cap
        super().__init__(
            f"full grid would have {predicted:.3e} candidates (cap {cap:.0e}); "
            "use RandomSample mode instead"
        )


class DegenerateSpanError(Gapped1DError, ValueError):
    """Every Gram eigenvalue fell below the rank threshold."""


class TermOverflowError(Gapped1DError, ValueError):
    """A cut decomposition would produce more left/right pairs than allowed."""


class ConfigError(Gapped1DError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class IterationAborted(Gapped1DError, RuntimeError):
    """A pipeline iteration could not produce a usable viable set."""

    def __init__(self, iteration: int, step: str, diagnostic: str):
        self.iteration = iteration
        self.step = step
        self.diagnostic = diagnostic
        super().__init__(f"iteration {iteration}, {step}: {diagnostic}")
