"""Exception hierarchy shared by all modules."""


class IsofluidError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(IsofluidError, ValueError):
    pass


class DomainError(IsofluidError, ValueError):
    pass


class StepFailure(IsofluidError, RuntimeError):
    """Adaptive integration could not proceed. Indicates a bug, not physics."""


class NotYetMonotone(IsofluidError, ValueError):
    """The scaling function is not yet increasing at the requested time."""


class QuadratureFailure(IsofluidError, RuntimeError):
    pass


class CFLViolation(IsofluidError, ValueError):
    pass


class StabilityViolation(IsofluidError, ValueError):
    pass


class NegativeDensity(IsofluidError, RuntimeError):
    pass


class InvalidRegime(IsofluidError, ValueError):
    pass


class ParseError(IsofluidError, ValueError):
    pass


class ValidationError(IsofluidError, ValueError):
    """Carries every violated precondition, as ``(field_path, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: {msg}" for path, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
