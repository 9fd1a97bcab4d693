"""Exception hierarchy shared by every ccwsim module."""


class CCWSimError(Exception):
    """Base class for all errors raised by ccwsim."""


class BoundsError(CCWSimError, IndexError):
    """A rectangle or coordinate falls outside a grid."""


class DimensionError(CCWSimError, ValueError):
    """Array dimensions are incompatible with the requested operation."""


class StructureError(CCWSimError, ValueError):
    """Inputs are internally inconsistent (mismatched shapes, window sizes...)."""


class EmptyInputError(CCWSimError, ValueError):
    pass


class ConfigError(CCWSimError, ValueError):
    """Invalid simulation parameters. ``key`` names the offending setting when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ParseError(CCWSimError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class DegeneracyError(CCWSimError, ValueError):
    """A metric is undefined because the inputs carry no variability."""


class SequencingError(CCWSimError, RuntimeError):
    """Internal guard: an overlap region references cells not yet simulated."""
