"""Exception types shared across the package."""


class VvlabError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(VvlabError):
    """Invalid domain geometry: degenerate bounds, non-convex polygon,
    obstacle touching the outer box, or a pairing ball that misses it."""


class SupportError(VvlabError):
    """A test function's support reaches solid or ghost cells."""


class GridMismatchError(VvlabError):
    """Fields or ensembles defined on incompatible grids or time lists."""


class SolverBlowup(VvlabError):
    """Time integration produced NaN or negative density beyond the floor."""


class CflViolation(SolverBlowup):
    """A step was requested with dt above the advective or viscous bound."""


class ConfigError(VvlabError):
    """Malformed or inconsistent experiment configuration."""
