"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes (config 2, data 3, numerical 4), and the
service maps them onto HTTP statuses, so raising the right subclass matters.
"""


class KrfError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(KrfError, ValueError):
    """An operation received arguments that violate its contract."""


class InvalidPoseError(InvalidInputError):
    """A rotation matrix is not orthonormal with determinant +1."""


class DegenerateGeometryError(KrfError):
    """Point configuration too degenerate to determine a transform."""


class ConfigError(KrfError):
    """A run configuration is malformed or references missing inputs."""


class DataError(KrfError):
    """Input data files are missing, inconsistent, or unreadable."""


class PlyParseError(DataError):
    """A PLY file could not be parsed.

    Carries the path and the byte offset at which parsing failed.
    """

    def __init__(self, path, offset, message):
        self.path = str(path)
        self.offset = int(offset)
        super().__init__(f"{path}: byte {offset}: {message}")


EXIT_CODES = {"config": 2, "data": 3, "numerical": 4}


def error_kind(exc: KrfError) -> str:
    """Classify an error for exit-code / HTTP-status mapping."""
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (DegenerateGeometryError, InvalidPoseError)):
        return "numerical"
    return "data"
