"""Exception hierarchy shared by every module."""


class FlameDetError(Exception):
    """Base class for all package errors."""


class ShapeError(FlameDetError, ValueError):
    """Tensor shapes or channel counts do not line up."""


class ConfigError(FlameDetError, ValueError):
    """A block or model configuration is invalid."""


class WeightLoadError(FlameDetError):
    """A weight container is malformed or does not match the graph."""


class FormatError(FlameDetError):
    """A file on disk does not follow its documented format."""


class LabelParseError(FormatError):
    """A YOLO label line could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.reason = message
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DomainError(FlameDetError, ValueError):
    """An argument lies outside the domain of a function."""
