class SeqMultiError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteIncrementError(SeqMultiError, ValueError):
    """An LLR increment was NaN or infinite; the stream model is broken."""


class ImpossibleErrorEvent(SeqMultiError, ValueError):
    """The requested familywise error cannot occur for this signal set."""


class CalibrationError(SeqMultiError, RuntimeError):
    """Threshold search could not bracket or reach the target error."""


class EnumerationLimitError(SeqMultiError, ValueError):
    """A prior class is too large to enumerate for a non-exchangeable panel."""
