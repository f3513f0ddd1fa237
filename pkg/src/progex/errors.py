"""Exception types shared across the package."""


class ProgexError(Exception):
    """Base class for all package errors."""


class InapplicableChange(ProgexError):
    pass


class Unsolvable(ProgexError):
    pass


class NoCompleteExplanation(ProgexError):
    pass


class LatticeTooLarge(ProgexError):
    pass


class LengthMismatch(ProgexError, ValueError):
    pass


class UnknownContingency(ProgexError, KeyError):
    pass


class InvalidTrace(ProgexError):
    pass


class Diverged(ProgexError):
    pass


class UnsolvableScenario(ProgexError):
    pass


class GenerationExhausted(ProgexError):
    pass


class FormatError(ProgexError, ValueError):
    """Raised when a text file does not follow its format."""


class PlanNotOptimal(ProgexError):
    """The robot's plan is not optimal in the robot's own model."""
