"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class RadarCubeError(Exception):
    """Base class for all package errors."""


class ConfigError(RadarCubeError, ValueError):
    """Invalid configuration or malformed input document."""


class DomainError(RadarCubeError, ValueError):
    """A value lies outside the physically valid domain (range, angle, ...)."""


class ShapeError(RadarCubeError, ValueError):
    """Tensor dimensions do not agree."""


class ContainerError(RadarCubeError, IOError):
    """Corrupt or unreadable RCUBE container."""
