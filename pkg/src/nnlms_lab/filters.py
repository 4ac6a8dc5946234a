"""Weight-update rules of NNLMS, its three variants and plain LMS.

All non-negative rules scale the correction of tap ``i`` by (a power of)
``alpha_i``, so a tap that reaches exactly zero stays there. ``sgn(0)`` is
taken as 0 throughout.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DivergenceError, InvalidArgumentError


class AlgorithmKind(str, Enum):
    NNLMS = "NNLMS"
    NORMALIZED = "NormalizedNNLMS"
    EXPONENTIAL = "ExponentialNNLMS"
    SIGN_SIGN = "SignSignNNLMS"
    PLAIN_LMS = "PlainLMS"

    @property
    def code(self):
        """Integer code used by the compiled kernels."""
        return _KIND_CODES[self]


_KIND_CODES = {
    AlgorithmKind.NNLMS: 0,
    AlgorithmKind.NORMALIZED: 1,
    AlgorithmKind.EXPONENTIAL: 2,
    AlgorithmKind.SIGN_SIGN: 3,
    AlgorithmKind.PLAIN_LMS: 4,
}


@dataclass(frozen=True)
class Algorithm:
    """An update rule together with its parameters.

    ``regularizer`` is only read by the normalized rule and ``exponent`` only
    by the exponential rule. A zero step size is accepted and freezes the
    filter.
    """

    kind: AlgorithmKind
    step_size: float
    regularizer: float = 0.0
    exponent: float = 1.0

    def __post_init__(self):
        try:
            kind = AlgorithmKind(self.kind)
        except ValueError:
            names = ", ".join(k.value for k in AlgorithmKind)
            raise InvalidArgumentError(f"unknown algorithm kind {self.kind!r}; expected one of {names}") from None
        object.__setattr__(self, "kind", kind)
        eta = float(self.step_size)
        if not np.isfinite(eta) or eta < 0:
            raise InvalidArgumentError(f"step_size must be >= 0, got {self.step_size}")
        eps = float(self.regularizer)
        if not np.isfinite(eps) or eps < 0:
            raise InvalidArgumentError(f"regularizer must be >= 0, got {self.regularizer}")
        gamma = float(self.exponent)
        if not 0.0 < gamma <= 1.0:
            raise InvalidArgumentError(f"exponent must lie in (0, 1], got {self.exponent}")
        object.__setattr__(self, "step_size", eta)
        object.__setattr__(self, "regularizer", eps)
        object.__setattr__(self, "exponent", gamma)


@dataclass(frozen=True)
class FilterState:
    weights: np.ndarray
    algorithm: Algorithm
    iteration: int = 0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, ndmin=1)
        if w.ndim != 1:
            raise InvalidArgumentError("weights must be one-dimensional")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def _check_dims(state, sample):
    x = np.asarray(sample.regressor, dtype=np.float64)
    if x.shape != state.weights.shape:
        raise InvalidArgumentError(
            f"regressor shape {x.shape} does not match weights shape {state.weights.shape}"
        )
    return x


def predict_error(state, sample):
    """Estimation error ``e(n) = y(n) - w(n) @ x(n)``."""
    x = _check_dims(state, sample)
    return float(sample.desired - state.weights @ x)


def signed_power(values, exponent):
    """Elementwise ``sgn(v) * |v|**exponent``."""
    return np.sign(values) * np.abs(values) ** exponent


def correction(weights, regressor, error, algorithm):
    """Weight increment ``w(n+1) - w(n)`` for one sample."""
    eta = algorithm.step_size
    kind = algorithm.kind
    if kind is AlgorithmKind.NNLMS:
        return eta * weights * error * regressor
    if kind is AlgorithmKind.NORMALIZED:
        energy = regressor @ regressor + algorithm.regularizer
        if not energy > 0:
            raise InvalidArgumentError("normalized update needs x'x + eps > 0")
        return (eta / energy) * weights * error * regressor
    if kind is AlgorithmKind.EXPONENTIAL:
        return eta * signed_power(weights, algorithm.exponent) * error * regressor
    if kind is AlgorithmKind.SIGN_SIGN:
        return eta * weights * np.sign(regressor * error)
    return eta * error * regressor


def update(state, sample):
    """Apply one update and return the next :class:`FilterState`.

    Raises
    ------
    DivergenceError
        If any updated weight is not finite.
    """
    x = _check_dims(state, sample)
    with np.errstate(over="ignore", invalid="ignore"):
        e = float(sample.desired - state.weights @ x)
        new = state.weights + correction(state.weights, x, e, state.algorithm)
    if not np.all(np.isfinite(new)):
        raise DivergenceError(state.iteration)
    return replace(state, weights=new, iteration=state.iteration + 1)
