"""Exception types shared across the package."""


class BlindGibbsError(Exception):
    """Base class for all package-specific errors."""


class DivergenceError(BlindGibbsError):
    """A sampler produced a non-finite state.

    Carries enough context (rung index or iteration/step name) to locate
    where the chain blew up.
    """

    def __init__(self, message, rung=None, iteration=None, step=None):
        super().__init__(message)
        self.rung = rung
        self.iteration = iteration
        self.step = step


class ConvergenceError(BlindGibbsError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class WeightFormatError(BlindGibbsError):
    """Base class for malformed denoiser weight files."""


class BadMagicError(WeightFormatError):
    pass


class UnsupportedVersionError(WeightFormatError):
    pass


class TruncatedFileError(WeightFormatError):
    pass


class DimensionChainError(WeightFormatError):
    pass
