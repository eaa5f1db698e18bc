"""Exception types shared across the package."""


class CutlocError(Exception):
    """Base class for all package errors."""


class ParameterError(CutlocError):
    """Invalid argument value (resolution, tolerance, relaxation factor, ...)."""


class MeshParseError(CutlocError):
    """Mesh file is malformed."""


class MeshTopologyError(CutlocError):
    """Mesh violates the closed-manifold requirements."""


class MeshGeometryError(CutlocError):
    """Degenerate geometry detected (zero-area triangle, ...)."""


class MeshMismatchError(CutlocError):
    """Operands index different meshes or have inconsistent sizes."""


class UnsupportedSurfaceError(CutlocError):
    """Operation requires an analytic surface tag the mesh does not carry."""


class NotACutPointError(CutlocError):
    """Queried point has a unique minimizing branch."""


class AmbiguousCutPointError(CutlocError):
    """Queried point has more than two minimizing branches."""

    def __init__(self, message, minimizers):
        super().__init__(message)
        self.minimizers = minimizers


class ConstructionError(CutlocError):
    """A certified construction could not be completed."""


class InclusionFailureError(CutlocError):
    """The non-contact gap on the cut locus is not positive."""


class ConfigError(CutlocError):
    """Run configuration file is invalid."""
