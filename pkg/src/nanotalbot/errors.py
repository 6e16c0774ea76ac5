"""Exception hierarchy shared by all modules."""


class NanoTalbotError(Exception):
    """Base class for library errors."""


class DomainError(NanoTalbotError, ValueError):
    pass


class RangeError(NanoTalbotError, ValueError):
    pass


class ConvergenceError(NanoTalbotError, RuntimeError):
    """Raised when a numerical procedure fails to meet its tolerance.

    The best available estimate and its error bound are kept so callers can
    decide whether to use them anyway.
    """

    def __init__(self, message, estimate=None, error=None, module=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.module = module


class ParseError(NanoTalbotError, ValueError):
    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


class ConfigError(ParseError):
    pass


class CapabilityError(NanoTalbotError, ValueError):
    pass


class InterfaceError(NanoTalbotError, ValueError):
    pass


class DegenerateInputError(NanoTalbotError, ValueError):
    pass


class InternalConsistencyError(NanoTalbotError, RuntimeError):
    pass
