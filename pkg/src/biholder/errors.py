"""Exception hierarchy shared by the analyzers."""


class BiholderError(Exception):
    pass


class ParameterError(BiholderError, ValueError):
    pass


class InvalidResolutionError(ParameterError):
    pass


class InvalidExponentError(ParameterError):
    pass


class BudgetExceededError(ParameterError):
    pass


class DimensionError(ParameterError):
    pass


class MissingPointError(BiholderError, KeyError):
    pass


class EmptySetError(BiholderError):
    pass


class DegenerateGeometryError(BiholderError):
    pass


class WitnessNotFoundError(BiholderError):
    pass


class MismatchError(BiholderError):
    pass


class InsufficientPairsError(BiholderError):
    pass


class DegenerateMapError(BiholderError):
    pass


class NonInjectiveError(BiholderError):
    pass


class WindowTooSmallError(BiholderError):
    pass


class UnsupportedModeError(BiholderError):
    pass


class DuplicatePointError(BiholderError):
    pass


class EmptyScaleError(BiholderError):
    pass


class EvaluationError(BiholderError):
    pass


class EmptyFamilyError(BiholderError):
    pass


class BoundViolationError(BiholderError):
    """Raised in verify mode when a requested exponent exceeds the admissible bound."""


class ConfigError(BiholderError):
    pass
