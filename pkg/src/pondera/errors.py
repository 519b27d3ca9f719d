"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A physical parameter lies outside its allowed domain."""


class SingularityError(ArithmeticError):
    """A response function was evaluated exactly on one of its poles.

    The offending angular frequencies are kept in ``omega``.
    """

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class UnstableError(RuntimeError):
    """The linearized dynamics around the operating point are unstable."""


class BistableError(RuntimeError):
    """Several stable steady states exist and none is singled out.

    ``roots`` holds every candidate so the caller can pick one.
    """

    def __init__(self, message, roots=()):
        super().__init__(message)
        self.roots = tuple(roots)


class IntegratorError(ValueError):
    """Time step or sampling choice incompatible with the simulator."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration.

    ``line`` is the 1-based line number in the source text, when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
