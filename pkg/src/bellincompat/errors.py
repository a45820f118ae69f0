"""Exception hierarchy. Every error is a ``ValueError`` so callers that only
care about bad input can catch one thing."""


class BellIncompatError(ValueError):
    pass


class DimensionMismatch(BellIncompatError):
    pass


class NotHermitian(BellIncompatError):
    pass


class InvalidP(BellIncompatError):
    pass


class NotUnitary(BellIncompatError):
    pass


class InvalidDimension(BellIncompatError):
    pass


class InvalidEta(BellIncompatError):
    pass


class NotRank1(BellIncompatError):
    pass


class OutcomeCountMismatch(BellIncompatError):
    pass


class InvalidPovm(BellIncompatError):
    pass


class InvalidState(BellIncompatError):
    pass


class OutOfRange(BellIncompatError):
    pass


class AngleOutOfRange(BellIncompatError):
    pass


class NotNormalized(BellIncompatError):
    pass


class InfeasibleTarget(BellIncompatError):
    pass


class ConfigError(BellIncompatError):
    pass


class UnknownKind(BellIncompatError):
    pass
