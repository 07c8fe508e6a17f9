"""Exception types shared by all modules."""


class InvalidArgument(ValueError):
    pass


class InvalidData(ValueError):
    pass


class PreconditionFailure(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericFailure(ArithmeticError):
    """Non-finite intermediate or singular linear system."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class OracleFailure(RuntimeError):
    pass


class SolveFailure(RuntimeError):
    """A time step failed; carries the step index and the states computed so far."""

    def __init__(self, message, step, partial=None, result=None):
        super().__init__(message)
        self.step = step
        self.partial = partial
        self.result = result
