"""Exception types shared across modules."""


class CrowdlocError(ValueError):
    """Base class for all library errors."""


class InvalidRegionError(CrowdlocError):
    pass


class InvalidLayoutError(CrowdlocError):
    pass


class InvalidPriorError(CrowdlocError):
    pass


class EmptyClusterError(CrowdlocError):
    pass


class InsufficientDataError(CrowdlocError):
    pass


class DegenerateGeometryError(CrowdlocError):
    pass


class UndefinedScaleError(CrowdlocError):
    pass


class ShadowingFactorizationError(CrowdlocError, ArithmeticError):
    pass


class SchemaError(CrowdlocError):
    """Tabular input does not match the expected columns."""
