"""Exception types raised by nnlms_lab."""


class NNLMSLabError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(NNLMSLabError, ValueError):
    pass


class DivergenceError(NNLMSLabError, FloatingPointError):
    """A weight update produced a non-finite value."""

    def __init__(self, iteration, message=None):
        self.iteration = int(iteration)
        super().__init__(message or f"filter diverged at iteration {self.iteration}")


class NoConvergenceError(NNLMSLabError, RuntimeError):
    pass


class PredictedInstabilityError(NNLMSLabError, ArithmeticError):
    """Closed-form EMSE is undefined because 2 - step * trace <= 0."""

    def __init__(self, step_size, trace):
        self.step_size = float(step_size)
        self.trace = float(trace)
        super().__init__(
            f"predicted instability: 2 - step*trace = {2.0 - self.step_size * self.trace:.6g} <= 0 "
            f"(step={self.step_size:.6g}, trace={self.trace:.6g})"
        )


class EnsembleFailureError(NNLMSLabError, RuntimeError):
    """Every run of an ensemble diverged."""


class ConfigError(NNLMSLabError, ValueError):
    """Manifest parse or validation failure."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
