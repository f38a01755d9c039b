"""Exception hierarchy shared across the solver."""


class SwedgError(Exception):
    """Base class for all solver errors."""


class ConfigError(SwedgError):
    """Invalid or inconsistent run configuration."""


class MeshError(SwedgError):
    """Degenerate geometry: inverted cells, unmatched face points, bad input meshes."""


class NegativeDepthError(SwedgError):
    """Total depth h = zeta + z_b dropped to or below the floor.

    Wetting and drying is unsupported, so this aborts the run instead of
    clipping. ``locations`` holds (x, y) pairs of offending quadrature points.
    """

    def __init__(self, message, locations=None, time=None):
        super().__init__(message)
        self.locations = locations if locations is not None else []
        self.time = time


class IOFailure(SwedgError):
    """File input/output failure (malformed raster, unwritable output...)."""
