"""Unknown linear system, AR(1) input process and sample streams."""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidArgumentError
from .seeding import check_seed, make_generator


def _as_vector(values, name):
    arr = np.array(values, dtype=np.float64, ndmin=1)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemModel:
    """``y(n) = true_weights @ x(n) + z(n)`` with ``z`` white Gaussian."""

    true_weights: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "true_weights", _as_vector(self.true_weights, "true_weights"))
        nv = float(self.noise_variance)
        if not np.isfinite(nv) or nv < 0:
            raise InvalidArgumentError(f"noise_variance must be >= 0, got {self.noise_variance}")
        object.__setattr__(self, "noise_variance", nv)

    @property
    def order(self):
        return self.true_weights.size


@dataclass(frozen=True)
class Ar1Process:
    """Stationary ``x(n) = pole * x(n-1) + w(n)``, ``w ~ N(0, innovation_variance)``."""

    pole: float
    innovation_variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        pole = float(self.pole)
        if not np.isfinite(pole) or abs(pole) >= 1.0:
            raise InvalidArgumentError(f"AR(1) pole must satisfy |pole| < 1, got {self.pole}")
        var = float(self.innovation_variance)
        if not np.isfinite(var) or var <= 0:
            raise InvalidArgumentError(
                f"innovation_variance must be > 0, got {self.innovation_variance}"
            )
        try:
            seed = check_seed(self.seed)
        except ValueError as exc:
            raise InvalidArgumentError(str(exc)) from None
        object.__setattr__(self, "pole", pole)
        object.__setattr__(self, "innovation_variance", var)
        object.__setattr__(self, "seed", seed)

    @property
    def variance(self):
        """Stationary variance ``sigma_w^2 / (1 - pole^2)``."""
        return self.innovation_variance / (1.0 - self.pole**2)


@dataclass(frozen=True)
class SamplePair:
    regressor: np.ndarray
    desired: float
    noise: float = field(default=0.0)


def generate_ar1(process, count):
    """Draw ``count`` stationary samples of an AR(1) process.

    The pre-sample state ``x(0)`` is drawn from the stationary law, so the
    returned sequence is stationary from its first element. Draw order from
    the process' generator: one variate for ``x(0)``, then ``count``
    innovations.

    Parameters
    ----------
    process : Ar1Process
    count : int
        Number of samples, at least 1.

    Returns
    -------
    numpy.ndarray
        ``x(1), ..., x(count)``.
    """
    count = int(count)
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    rng = make_generator(process.seed)
    x0 = rng.standard_normal() * np.sqrt(process.variance)
    w = rng.standard_normal(count) * np.sqrt(process.innovation_variance)
    x, _ = lfilter([1.0], [1.0, -process.pole], w, zi=[process.pole * x0])
    return x


def draw_noise(noise_variance, count, seed):
    """White Gaussian noise of the given variance from its own generator."""
    z = make_generator(seed).standard_normal(int(count))
    return z * np.sqrt(noise_variance)


def regressor_matrix(inputs, order):
    """Rows are tapped-delay-line regressors ``[x(n), x(n-1), ..., x(n-N+1)]``.

    ``inputs`` must carry ``order - 1`` warm-up samples in front; the result
    has ``len(inputs) - order + 1`` rows and is a read-only view.
    """
    windows = np.lib.stride_tricks.sliding_window_view(inputs, order)
    return windows[:, ::-1]


def stream_arrays(model, process, count, noise_seed):
    """Vectorised form of :func:`stream_samples`.

    Returns
    -------
    inputs : ndarray, shape (count + N - 1,)
        Input sequence including the ``N - 1`` warm-up samples.
    desired : ndarray, shape (count,)
    noise : ndarray, shape (count,)
    """
    count = int(count)
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    n_taps = model.order
    inputs = generate_ar1(process, count + n_taps - 1)
    noise = draw_noise(model.noise_variance, count, noise_seed)
    desired = regressor_matrix(inputs, n_taps) @ model.true_weights + noise
    return inputs, desired, noise


def stream_samples(model, process, count, noise_seed):
    """Yield ``count`` :class:`SamplePair` objects of the system identification stream.

    Input samples come from ``process.seed`` and noise from ``noise_seed``;
    the two generators are disjoint. ``N - 1`` stationary warm-up inputs are
    drawn first so that the very first regressor is fully populated.
    """
    inputs, desired, noise = stream_arrays(model, process, count, noise_seed)
    regressors = regressor_matrix(inputs, model.order)
    for n in range(int(count)):
        yield SamplePair(np.array(regressors[n]), float(desired[n]), float(noise[n]))
