class GsfrError(Exception):
    exit_code = 1


class ConfigError(GsfrError, ValueError):
    """Bad user-supplied configuration or selector."""
    exit_code = 2


class DataError(GsfrError, ValueError):
    """Malformed or unusable input data."""
    exit_code = 3


class InvariantError(GsfrError, RuntimeError):
    """An internal precondition or invariant was violated."""
    exit_code = 4
