"""Exception types raised across the package."""


class MoebiusSigError(Exception):
    """Base class for all package errors."""


class InvalidTransform(MoebiusSigError, ValueError):
    """Coefficients with ad - bc = 0."""


class DegenerateConfiguration(MoebiusSigError, ValueError):
    """Cross-ratio of a quadruple with too many coincident points."""


class DegenerateTriple(MoebiusSigError, ValueError):
    """Two of three points coincide, so no interpolating circle exists."""


class SampleCountTooSmall(MoebiusSigError, ValueError):
    pass


class MalformedCsv(MoebiusSigError, ValueError):
    pass


class NonUniformGrid(MoebiusSigError, ValueError):
    pass


class AtVertex(MoebiusSigError, ValueError):
    """Moebius curvature requested where the curvature derivative vanishes."""


class ShapeMismatch(MoebiusSigError, ValueError):
    pass


class PoleInDomain(MoebiusSigError, ValueError):
    pass


class EmptyLevelSet(MoebiusSigError, ValueError):
    pass


class MalformedImage(MoebiusSigError, ValueError):
    pass


class PossibleUndersampling(UserWarning):
    """Consecutive samples are too far apart for the principal log branch."""
