"""Exception hierarchy shared across the library.

The CLI maps these onto exit codes: configuration problems exit 2,
group/domain problems exit 3, numerical failures exit 4.
"""


class EisenlabError(Exception):
    """Base class for all library errors."""


class ConfigError(EisenlabError):
    """Malformed or inconsistent run configuration."""

    exit_code = 2


class GroupDomainError(EisenlabError):
    """Invalid group geometry or test-function placement."""

    exit_code = 3


class NumericalError(EisenlabError):
    """A numerical procedure could not meet its contract."""

    exit_code = 4


class InvalidConfigurationError(GroupDomainError):
    """Pairing disks overlap, touch, or are otherwise inadmissible."""


class SupportViolationError(GroupDomainError):
    """Test-function support leaves the fundamental domain (with margin)."""


class XiInLimitSetError(GroupDomainError):
    """Boundary point too close to the limit set for series evaluation."""


class NumericalDegeneracyError(NumericalError):
    """Denominator of a Moebius action vanished to working precision."""


class ResourceLimitError(NumericalError):
    """Enumeration exceeded its configured element cap."""


class ToleranceNotMetError(NumericalError):
    """Requested tolerance could not be certified; carries the achieved value."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DeltaDisagreementError(NumericalError):
    """The two exponent estimators disagree beyond combined uncertainty."""


class CutoffInsufficientError(NumericalError):
    """Geodesic/orbit cutoff too small for the requested tolerance."""


class OscillationBudgetError(NumericalError):
    """Requested frequency exceeds what the quadrature grid resolves."""
