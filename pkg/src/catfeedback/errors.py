class CatFeedbackError(Exception):
    """Base class for errors raised by this package."""


class TruncationError(CatFeedbackError):
    """A truncated Fock space cannot hold the requested state or operation."""


class ToleranceError(CatFeedbackError):
    """A numerical integrator or check could not reach its tolerance."""
