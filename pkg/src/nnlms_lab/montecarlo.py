"""Seeded ensembles of adaptive-filter trajectories and theory comparison."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import EnsembleFailureError, InvalidArgumentError
from .filters import Algorithm
from .seeding import check_seed, stream_seed
from .signal import Ar1Process, SystemModel, draw_noise, generate_ar1

DEFAULT_ITERATIONS = 30_000
DEFAULT_WINDOW_FRACTION = 0.2
STDERR_MULTIPLE = 3.0


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemModel
    process: Ar1Process
    algorithm: Algorithm
    initial_weights: np.ndarray
    iterations: int = DEFAULT_ITERATIONS
    runs: int = 100
    base_seed: int = 0
    steady_window_fraction: float = DEFAULT_WINDOW_FRACTION
    divergence_bound: float = None

    def __post_init__(self):
        w0 = np.array(self.initial_weights, dtype=np.float64, ndmin=1)
        if w0.size == 1 and self.system.order > 1:
            w0 = np.full(self.system.order, w0[0])
        if w0.shape != (self.system.order,):
            raise InvalidArgumentError(
                f"initial_weights has length {w0.size}, system order is {self.system.order}"
            )
        if not np.all(np.isfinite(w0)):
            raise InvalidArgumentError("initial_weights must be finite")
        w0.setflags(write=False)
        object.__setattr__(self, "initial_weights", w0)
        if int(self.iterations) < 100:
            raise InvalidArgumentError(f"iterations must be >= 100, got {self.iterations}")
        if int(self.runs) < 1:
            raise InvalidArgumentError(f"runs must be >= 1, got {self.runs}")
        frac = float(self.steady_window_fraction)
        if not 0.0 < frac <= 0.5:
            raise InvalidArgumentError(f"steady_window_fraction must lie in (0, 0.5], got {frac}")
        try:
            seed = check_seed(self.base_seed)
        except ValueError as exc:
            raise InvalidArgumentError(str(exc)) from None
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "runs", int(self.runs))
        object.__setattr__(self, "base_seed", seed)
        object.__setattr__(self, "steady_window_fraction", frac)
        if self.divergence_bound is not None and not float(self.divergence_bound) > 0:
            raise InvalidArgumentError("divergence_bound must be > 0")

    @property
    def weight_bound(self):
        """Magnitude beyond which a weight marks its run as diverged.

        Defaults to ``10 * (1 + max(|a*|, |a(0)|))``; no converging filter
        comes near it.
        """
        if self.divergence_bound is not None:
            return float(self.divergence_bound)
        scale = max(np.abs(self.system.true_weights).max(), np.abs(self.initial_weights).max())
        return 10.0 * (1.0 + float(scale))

    @property
    def window_length(self):
        return math.ceil(self.steady_window_fraction * self.iterations)


@dataclass(frozen=True)
class EnsembleResult:
    emse_trajectory: np.ndarray
    steady_state_emse: float
    steady_state_stderr: float
    diverged_runs: int
    final_mean_weights: np.ndarray
    runs: int
    window_length: int
    run_window_means: np.ndarray = field(repr=False)

    def summary(self):
        return {
            "runs": self.runs,
            "diverged_runs": self.diverged_runs,
            "window_length": self.window_length,
            "steady_state_emse": self.steady_state_emse,
            "steady_state_stderr": self.steady_state_stderr,
            "final_mean_weights": self.final_mean_weights.tolist(),
        }


def run_streams(config, run):
    """Input (with warm-up) and noise sequences of run ``run`` (1-based)."""
    n_taps = config.system.order
    process = replace(config.process, seed=stream_seed(config.base_seed, run, "input"))
    inputs = generate_ar1(process, config.iterations + n_taps - 1)
    noise = draw_noise(config.system.noise_variance, config.iterations, stream_seed(config.base_seed, run, "noise"))
    return inputs, noise


def _batch_means_stderr(samples, batches=10):
    usable = samples[: samples.size - samples.size % batches].reshape(batches, -1).mean(axis=1)
    return float(usable.std(ddof=1) / math.sqrt(batches))


def run_ensemble(config, backend=None):
    """Simulate ``config.runs`` independent trajectories and average them.

    Run ``r`` (1-based) draws its input and noise streams from
    :func:`~nnlms_lab.seeding.stream_seed` of ``(base_seed, r)``, so every
    statistic depends only on the configuration. The a-priori excess error
    ``(a* - a(n))' x(n)`` is recorded directly. Runs whose weights turn
    non-finite or leave ``config.weight_bound`` are excluded and counted.

    With more than one surviving run the standard error is that of the
    per-run window means; a single run falls back to ten batch means of its
    window.

    Raises
    ------
    EnsembleFailureError
        If every run diverged.
    """
    streams = [run_streams(config, r) for r in range(1, config.runs + 1)]
    inputs = np.stack([s[0] for s in streams])
    noise = np.stack([s[1] for s in streams])
    del streams
    alg = config.algorithm
    ea2, final, diverged_at = _kernels.run_batch(
        inputs,
        noise,
        config.system.true_weights,
        config.initial_weights,
        alg.kind.code,
        alg.step_size,
        alg.regularizer,
        alg.exponent,
        bound=config.weight_bound,
        use=backend,
    )
    ok = diverged_at < 0
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise EnsembleFailureError(f"all {config.runs} runs diverged")
    good = ea2[ok]
    trajectory = good.mean(axis=0)
    window = config.window_length
    run_means = good[:, -window:].mean(axis=1)
    steady = float(trajectory[-window:].mean())
    if n_ok > 1:
        stderr = float(run_means.std(ddof=1) / math.sqrt(n_ok))
    else:
        stderr = _batch_means_stderr(good[0, -window:])
    return EnsembleResult(
        emse_trajectory=trajectory,
        steady_state_emse=steady,
        steady_state_stderr=stderr,
        diverged_runs=config.runs - n_ok,
        final_mean_weights=final[ok].mean(axis=0),
        runs=config.runs,
        window_length=window,
        run_window_means=run_means,
    )


def to_db(value):
    return 10.0 * math.log10(value) if value > 0 else -math.inf


@dataclass(frozen=True)
class ComparisonReport:
    simulated: float
    predicted: float
    abs_difference: float
    difference_db: float
    stderr: float
    within_stderr: bool
    tolerance_db: float
    passed: bool
    diverged_runs: int = 0

    @property
    def flagged(self):
        return self.diverged_runs > 0

    def to_dict(self):
        d = dict(self.__dict__)
        d["flagged"] = self.flagged
        return d


def compare(result, prediction, tolerance_db=1.0):
    """Compare a simulated steady-state EMSE with a prediction.

    ``difference_db`` is ``10 log10(simulated / predicted)``; the comparison
    passes when its magnitude is at most ``tolerance_db``.
    ``within_stderr`` reports whether the absolute gap is within three
    standard errors of the ensemble estimate.
    """
    sim = float(result.steady_state_emse)
    pred = float(prediction.emse_total)
    if sim > 0 and pred > 0:
        diff_db = 10.0 * math.log10(sim / pred)
    elif sim == pred:
        diff_db = 0.0
    else:
        diff_db = math.inf
    gap = abs(sim - pred)
    return ComparisonReport(
        simulated=sim,
        predicted=pred,
        abs_difference=gap,
        difference_db=diff_db,
        stderr=float(result.steady_state_stderr),
        within_stderr=bool(gap <= STDERR_MULTIPLE * result.steady_state_stderr),
        tolerance_db=float(tolerance_db),
        passed=bool(abs(diff_db) <= tolerance_db),
        diverged_runs=int(result.diverged_runs),
    )
