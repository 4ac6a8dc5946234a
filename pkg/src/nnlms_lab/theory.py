"""Steady-state side: correlation matrix, constrained Wiener solution, EMSE predictions.

The mean steady-state weights are approximated by the non-negativity
constrained Wiener solution (the KKT point of the constrained MSE problem),
or supplied by the caller, e.g. from ensemble-averaged final weights.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, toeplitz, LinAlgError

from .errors import InvalidArgumentError, NoConvergenceError, PredictedInstabilityError
from .filters import AlgorithmKind

KKT_TOL = 1e-10


@dataclass(frozen=True)
class CorrelationModel:
    matrix: np.ndarray
    input_variance: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, ndmin=2)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError("correlation matrix must be square")
        if not np.all(np.isfinite(m)):
            raise InvalidArgumentError("correlation matrix must be finite")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise InvalidArgumentError("correlation matrix must be symmetric")
        var = float(self.input_variance)
        if not var > 0:
            raise InvalidArgumentError(f"input_variance must be > 0, got {self.input_variance}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "input_variance", var)

    @property
    def order(self):
        return self.matrix.shape[0]

    @classmethod
    def white(cls, order, variance=1.0):
        return cls(variance * np.eye(order), variance)


def build_correlation(process, order):
    """Toeplitz correlation ``R[i, j] = sigma_x^2 * pole^|i-j|`` of an AR(1) input."""
    order = int(order)
    if order < 1:
        raise InvalidArgumentError("order must be >= 1")
    if abs(process.pole) >= 1:
        raise InvalidArgumentError("AR(1) pole must satisfy |pole| < 1")
    var = process.variance
    return CorrelationModel(toeplitz(var * process.pole ** np.arange(order)), var)


def _cholesky(matrix):
    try:
        return cho_factor(matrix, lower=True, check_finite=True)
    except LinAlgError:
        raise InvalidArgumentError("correlation matrix is not positive definite") from None


def kkt_residuals(weights, true_weights, corr):
    """KKT violations of ``min (a - a*)' R (a - a*)  s.t.  a >= 0``.

    Returns a dict with the worst primal infeasibility (``-min a``), the
    worst negative gradient on the zero set and the worst absolute gradient
    on the positive set. The gradient is ``2 R (a - a*)``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    grad = 2.0 * corr.matrix @ (weights - np.asarray(true_weights, dtype=np.float64))
    zero = weights <= 0
    return {
        "primal": float(max(0.0, -weights.min())),
        "dual_zero_set": float(max(0.0, -grad[zero].min())) if zero.any() else 0.0,
        "stationarity_positive_set": float(np.abs(grad[~zero]).max()) if (~zero).any() else 0.0,
    }


def solve_constrained_wiener(model, corr, max_swaps=None):
    """Non-negativity constrained Wiener solution by an active-set (Lawson-Hanson) method.

    Minimises ``(a - a*)' R (a - a*)`` over ``a >= 0``, which has the same
    minimiser as the constrained MSE since the noise is independent of the
    input. The problem is solved in Gram form: with ``b = R a*`` the
    negative gradient is ``b - R a``.

    Parameters
    ----------
    model : SystemModel
    corr : CorrelationModel
    max_swaps : int, optional
        Cap on the number of active-set changes, ``10 * N`` by default.

    Returns
    -------
    ndarray
        The minimiser, with exact zeros on the active set.
    """
    R = corr.matrix
    a_star = model.true_weights
    n = a_star.size
    if R.shape != (n, n):
        raise InvalidArgumentError(f"correlation order {R.shape[0]} != system order {n}")
    _cholesky(R)
    b = R @ a_star

    if np.all(a_star >= 0):
        return a_star.copy()

    max_swaps = 10 * n if max_swaps is None else int(max_swaps)
    tol = 1e-14 * n * max(1.0, float(np.abs(R).max())) * max(1.0, float(np.abs(a_star).max()))
    passive = np.zeros(n, dtype=bool)
    x = np.zeros(n)
    swaps = 0

    def solve_on(mask):
        z = np.zeros(n)
        idx = np.flatnonzero(mask)
        z[idx] = cho_solve(_cholesky(R[np.ix_(idx, idx)]), b[idx])
        return z

    while True:
        w = b - R @ x
        candidates = ~passive & (w > tol)
        if not candidates.any():
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        swaps += 1
        while True:
            if swaps > max_swaps:
                raise NoConvergenceError(f"active-set NNLS exceeded {max_swaps} swaps")
            z = solve_on(passive)
            bad = passive & (z <= 0)
            if not bad.any():
                x = z
                break
            # step back to the first blocking constraint
            ratios = x[bad] / (x[bad] - z[bad])
            step = float(ratios.min())
            x = x + step * (z - x)
            dropped = passive & (x <= tol)
            dropped[np.flatnonzero(bad)[np.argmin(ratios)]] = True
            passive &= ~dropped
            x[~passive] = 0.0
            swaps += int(dropped.sum())
    return x


def default_threshold(weights):
    peak = float(np.max(weights)) if np.size(weights) else 0.0
    return 1e-6 * peak if peak > 0 else np.finfo(float).tiny


def classify_support(weights, threshold):
    """Split tap indices into ``(positive_set, zero_set)`` by ``weights <= threshold``."""
    if not threshold > 0:
        raise InvalidArgumentError("threshold must be > 0")
    weights = np.asarray(weights, dtype=np.float64)
    zero = weights <= threshold
    return tuple(np.flatnonzero(~zero).tolist()), tuple(np.flatnonzero(zero).tolist())


def emse_bias_term(bias_vector, corr):
    """Deterministic EMSE component ``v' R v`` of a mean weight-error ``v``."""
    v = np.asarray(bias_vector, dtype=np.float64)
    if v.shape != (corr.order,):
        raise InvalidArgumentError(f"bias vector shape {v.shape} does not match order {corr.order}")
    return max(0.0, float(v @ corr.matrix @ v))


@dataclass(frozen=True)
class SteadyStatePrediction:
    algorithm: str
    mean_weights: np.ndarray
    positive_set: tuple
    zero_set: tuple
    bias_vector: np.ndarray
    emse_bias: float
    emse_fluctuation: float
    emse_total: float
    effective_step: float
    trace_term: float

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "mean_weights": self.mean_weights.tolist(),
            "positive_set": list(self.positive_set),
            "zero_set": list(self.zero_set),
            "bias_vector": self.bias_vector.tolist(),
            "emse_bias": self.emse_bias,
            "emse_fluctuation": self.emse_fluctuation,
            "emse_total": self.emse_total,
            "effective_step": self.effective_step,
            "trace_term": self.trace_term,
        }


def _support(mean_weights, true_weights, corr, threshold):
    mean_weights = np.array(mean_weights, dtype=np.float64)
    true_weights = np.asarray(true_weights, dtype=np.float64)
    if mean_weights.shape != (corr.order,) or true_weights.shape != (corr.order,):
        raise InvalidArgumentError("weight vectors must match the correlation order")
    if threshold is None:
        threshold = default_threshold(mean_weights)
    positive, zero = classify_support(mean_weights, threshold)
    mean_weights[list(zero)] = 0.0
    bias = mean_weights - true_weights
    return mean_weights, positive, zero, bias, emse_bias_term(bias, corr)


def _lms_like(name, step, trace, noise_variance, emse_inf, mean_weights, positive, zero, bias):
    denom = 2.0 - step * trace
    if not denom > 0:
        raise PredictedInstabilityError(step, trace)
    fluct = step * (noise_variance * trace + emse_inf) / denom
    return SteadyStatePrediction(
        algorithm=name,
        mean_weights=mean_weights,
        positive_set=positive,
        zero_set=zero,
        bias_vector=bias,
        emse_bias=emse_inf,
        emse_fluctuation=fluct,
        emse_total=fluct + emse_inf,
        effective_step=step,
        trace_term=trace,
    )


def _check_common(step_size, noise_variance):
    if not step_size >= 0:
        raise InvalidArgumentError("step size must be >= 0")
    if not noise_variance >= 0:
        raise InvalidArgumentError("noise variance must be >= 0")


def predict_emse_nnlms(step_size, noise_variance, corr, mean_weights, true_weights, threshold=None):
    """Steady-state EMSE of NNLMS.

    ``EMSE = eta (s2 T + EMSE_inf) / (2 - eta T) + EMSE_inf`` with
    ``T = sum_i E{a_i} R_ii`` and ``EMSE_inf`` the bias term.
    """
    _check_common(step_size, noise_variance)
    mw, pos, zero, bias, emse_inf = _support(mean_weights, true_weights, corr, threshold)
    trace = float(mw @ np.diag(corr.matrix))
    return _lms_like(
        AlgorithmKind.NNLMS.value, float(step_size), trace, noise_variance, emse_inf, mw, pos, zero, bias
    )


def equivalent_step(step_size, order, input_variance):
    """Step of NNLMS that a normalized update of step ``step_size`` behaves like."""
    return step_size / (order * input_variance)


def predict_emse_normalized(step_size, noise_variance, corr, mean_weights, true_weights, threshold=None):
    """NNLMS prediction evaluated at the equivalent step ``eta / (N sigma_x^2)``."""
    base = predict_emse_nnlms(
        equivalent_step(step_size, corr.order, corr.input_variance),
        noise_variance,
        corr,
        mean_weights,
        true_weights,
        threshold,
    )
    return _renamed(base, AlgorithmKind.NORMALIZED.value)


def _renamed(pred, name):
    return SteadyStatePrediction(**{**pred.__dict__, "algorithm": name})


def predict_emse_exponential(step_size, exponent, noise_variance, corr, mean_weights, true_weights, threshold=None):
    """Exponential NNLMS: NNLMS form with ``T = sum_i E{a_i}**gamma R_ii``.

    Zero-set taps contribute nothing to the trace.
    """
    _check_common(step_size, noise_variance)
    if not 0 < exponent <= 1:
        raise InvalidArgumentError("exponent must lie in (0, 1]")
    mw, pos, zero, bias, emse_inf = _support(mean_weights, true_weights, corr, threshold)
    powered = np.zeros_like(mw)
    idx = list(pos)
    powered[idx] = mw[idx] ** exponent
    trace = float(powered @ np.diag(corr.matrix))
    return _lms_like(
        AlgorithmKind.EXPONENTIAL.value, float(step_size), trace, noise_variance, emse_inf, mw, pos, zero, bias
    )


def predict_emse_signsign(step_size, noise_variance, corr, mean_weights, true_weights, input_std=None, threshold=None):
    """Sign-Sign NNLMS: ``(eta pi / 4) sum_i E{a_i} sigma_x sqrt(s2 + EMSE_inf) + EMSE_inf``."""
    _check_common(step_size, noise_variance)
    sigma_x = math.sqrt(corr.input_variance) if input_std is None else float(input_std)
    if not sigma_x > 0:
        raise InvalidArgumentError("input standard deviation must be > 0")
    mw, pos, zero, bias, emse_inf = _support(mean_weights, true_weights, corr, threshold)
    trace = float(mw.sum())
    fluct = step_size * math.pi / 4.0 * trace * sigma_x * math.sqrt(noise_variance + emse_inf)
    return SteadyStatePrediction(
        algorithm=AlgorithmKind.SIGN_SIGN.value,
        mean_weights=mw,
        positive_set=pos,
        zero_set=zero,
        bias_vector=bias,
        emse_bias=emse_inf,
        emse_fluctuation=fluct,
        emse_total=fluct + emse_inf,
        effective_step=float(step_size),
        trace_term=trace,
    )


def predict(algorithm, model, corr, mean_weights=None, threshold=None):
    """Dispatch to the predictor matching ``algorithm.kind``.

    ``mean_weights`` defaults to the constrained Wiener solution. Plain LMS
    converges to the unconstrained optimum and is predicted with the classic
    ``eta s2 tr(R) / (2 - eta tr(R))``.
    """
    kind = algorithm.kind
    s2 = model.noise_variance
    if kind is AlgorithmKind.PLAIN_LMS:
        mw = model.true_weights.copy()
        bias = np.zeros(corr.order)
        return _lms_like(
            kind.value, algorithm.step_size, float(np.trace(corr.matrix)), s2, 0.0,
            mw, tuple(range(corr.order)), (), bias,
        )
    if mean_weights is None:
        mean_weights = solve_constrained_wiener(model, corr)
    common = dict(corr=corr, mean_weights=mean_weights, true_weights=model.true_weights, threshold=threshold)
    if kind is AlgorithmKind.NNLMS:
        return predict_emse_nnlms(algorithm.step_size, s2, **common)
    if kind is AlgorithmKind.NORMALIZED:
        return predict_emse_normalized(algorithm.step_size, s2, **common)
    if kind is AlgorithmKind.EXPONENTIAL:
        return predict_emse_exponential(algorithm.step_size, algorithm.exponent, s2, **common)
    return predict_emse_signsign(algorithm.step_size, s2, **common)
