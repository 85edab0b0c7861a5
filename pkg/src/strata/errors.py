"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class StrataError(Exception):
    exit_code = 1


class DomainError(StrataError, ValueError):
    """Non-finite input to a potential evaluation."""


class ConfigError(StrataError):
    exit_code = 2

    def __init__(self, message, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message
        self.key = key
        self.line = line


class HypothesisError(StrataError):
    """A structural assumption on the potential or the minimizer set fails."""

    exit_code = 3


class ConvergenceError(StrataError):
    exit_code = 4


class GeometryError(StrataError, ValueError):
    """Requested construction does not fit on the truncated grid."""


class NotAConnectionError(StrataError, ValueError):
    pass


class AtlasInconsistencyError(StrataError):
    pass


class TurningDetectionError(StrataError):
    pass
