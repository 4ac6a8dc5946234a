"""Ensemble trajectory kernels.

Two interchangeable backends run a batch of independent adaptive-filter
trajectories:

``numba``
    per-run scalar loops compiled with ``@njit``; runs are distributed with
    ``prange``.
``numpy``
    pure numpy, vectorised across runs and looping over time in Python.

The numba backend is used when numba imports and ``NNLMS_LAB_DISABLE_JIT``
is unset or ``0``. ``NNLMS_LAB_THREADS`` caps numba's thread count
(``0`` or unset means numba's default).

Both backends evaluate every per-tap expression in the same order, but the
inner products are summed differently, so results agree to rounding, not
bitwise. Each backend on its own is deterministic.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

NNLMS, NORMALIZED, EXPONENTIAL, SIGN_SIGN, PLAIN_LMS = range(5)


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


def backend():
    """Name of the backend selected by the environment: ``"numba"`` or ``"numpy"``."""
    if HAVE_NUMBA and not _env_flag("NNLMS_LAB_DISABLE_JIT"):
        return "numba"
    return "numpy"


def thread_cap():
    raw = os.environ.get("NNLMS_LAB_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"NNLMS_LAB_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError("NNLMS_LAB_THREADS must be >= 0")
    return value


def _run_single(x, noise, true_w, w0, kind, eta, eps, gamma, bound, ea2, final):
    n_taps = w0.shape[0]
    n_iter = noise.shape[0]
    w = w0.copy()
    for n in range(n_iter):
        top = n + n_taps - 1
        yhat = 0.0
        ea = 0.0
        y = 0.0
        energy = 0.0
        for i in range(n_taps):
            xi = x[top - i]
            yhat += w[i] * xi
            ea += (true_w[i] - w[i]) * xi
            y += true_w[i] * xi
            energy += xi * xi
        e = (y + noise[n]) - yhat
        ea2[n] = ea * ea
        mu = eta
        if kind == NORMALIZED:
            mu = eta / (energy + eps)
        ok = True
        for i in range(n_taps):
            xi = x[top - i]
            wi = w[i]
            if kind == NNLMS or kind == NORMALIZED:
                wi = wi + mu * wi * e * xi
            elif kind == EXPONENTIAL:
                if wi > 0.0:
                    s = abs(wi) ** gamma
                elif wi < 0.0:
                    s = -(abs(wi) ** gamma)
                else:
                    s = 0.0
                wi = wi + eta * s * e * xi
            elif kind == SIGN_SIGN:
                p = xi * e
                if p > 0.0:
                    wi = wi + eta * wi
                elif p < 0.0:
                    wi = wi + eta * wi * -1.0
            else:
                wi = wi + eta * e * xi
            if not (abs(wi) <= bound):
                ok = False
            w[i] = wi
        if not ok:
            for m in range(n + 1, n_iter):
                ea2[m] = np.nan
            for i in range(n_taps):
                final[i] = w[i]
            return n
    for i in range(n_taps):
        final[i] = w[i]
    return -1


def _run_batch_loops(inputs, noise, true_w, w0, kind, eta, eps, gamma, bound, ea2, final, diverged):
    for r in range(noise.shape[0]):
        diverged[r] = _run_single(inputs[r], noise[r], true_w, w0, kind, eta, eps, gamma, bound, ea2[r], final[r])


if HAVE_NUMBA:
    _run_single_jit = njit(cache=True)(_run_single)

    @njit(cache=True, parallel=True)
    def _run_batch_jit(inputs, noise, true_w, w0, kind, eta, eps, gamma, bound, ea2, final, diverged):
        for r in prange(noise.shape[0]):
            diverged[r] = _run_single_jit(
                inputs[r], noise[r], true_w, w0, kind, eta, eps, gamma, bound, ea2[r], final[r]
            )


def _run_batch_numpy(inputs, noise, true_w, w0, kind, eta, eps, gamma, bound, ea2, final, diverged):
    n_runs, n_iter = noise.shape
    n_taps = w0.shape[0]
    windows = np.lib.stride_tricks.sliding_window_view(inputs, n_taps, axis=1)[:, :, ::-1]
    w = np.tile(w0, (n_runs, 1))
    alive = np.ones(n_runs, dtype=bool)
    diverged[:] = -1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(n_iter):
            xn = windows[:, n, :]
            yhat = np.einsum("ri,ri->r", w, xn)
            ea = np.einsum("ri,ri->r", true_w - w, xn)
            e = (xn @ true_w + noise[:, n]) - yhat
            ea2[:, n] = ea * ea
            ec = e[:, None]
            if kind == NNLMS:
                w = w + eta * w * ec * xn
            elif kind == NORMALIZED:
                mu = (eta / (np.einsum("ri,ri->r", xn, xn) + eps))[:, None]
                w = w + mu * w * ec * xn
            elif kind == EXPONENTIAL:
                w = w + eta * (np.sign(w) * np.abs(w) ** gamma) * ec * xn
            elif kind == SIGN_SIGN:
                w = w + eta * w * np.sign(xn * ec)
            else:
                w = w + eta * ec * xn
            bad = alive & ~(np.abs(w) <= bound).all(axis=1)
            if bad.any():
                diverged[bad] = n
                final[bad] = w[bad]
                alive &= ~bad
                w[bad] = 0.0
    final[alive] = w[alive]
    for r in np.flatnonzero(diverged >= 0):
        ea2[r, diverged[r] + 1 :] = np.nan


def run_batch(
    inputs, noise, true_weights, initial_weights, kind, eta, eps=0.0, gamma=1.0, bound=np.inf, use=None
):
    """Run ``R`` independent trajectories.

    Parameters
    ----------
    inputs : ndarray, shape (R, K + N - 1)
        Input sequences including ``N - 1`` warm-up samples each.
    noise : ndarray, shape (R, K)
    true_weights, initial_weights : ndarray, shape (N,)
    kind : int
        Algorithm code (see :attr:`AlgorithmKind.code`).
    eta, eps, gamma : float
        Step size, normalization regularizer, exponent.
    bound : float
        A run is declared diverged once any weight is non-finite or exceeds
        ``bound`` in magnitude.
    use : {"numba", "numpy", "loops", None}
        Force a backend; ``None`` defers to :func:`backend`. ``"loops"`` runs
        the scalar kernel uncompiled and exists for testing.

    Returns
    -------
    ea2 : ndarray, shape (R, K)
        Squared a-priori excess error per run and iteration (NaN after a
        divergence).
    final : ndarray, shape (R, N)
        Weights after the last update (or at divergence).
    diverged : ndarray of int64, shape (R,)
        Iteration index at which a run diverged, ``-1`` otherwise.
    """
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    true_w = np.ascontiguousarray(true_weights, dtype=np.float64)
    w0 = np.ascontiguousarray(initial_weights, dtype=np.float64)
    n_runs, n_iter = noise.shape
    n_taps = w0.shape[0]
    if inputs.shape != (n_runs, n_iter + n_taps - 1):
        raise ValueError(f"inputs shape {inputs.shape} != {(n_runs, n_iter + n_taps - 1)}")
    if true_w.shape != w0.shape:
        raise ValueError("true and initial weights differ in length")
    ea2 = np.empty((n_runs, n_iter))
    final = np.empty((n_runs, n_taps))
    diverged = np.full(n_runs, -1, dtype=np.int64)
    args = (
        inputs, noise, true_w, w0, int(kind), float(eta), float(eps), float(gamma), float(bound),
        ea2, final, diverged,
    )

    which = use or backend()
    if which == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        cap = thread_cap()
        if cap:
            numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
        _run_batch_jit(*args)
    elif which == "numpy":
        _run_batch_numpy(*args)
    elif which == "loops":
        _run_batch_loops(*args)
    else:
        raise ValueError(f"unknown backend {which!r}")
    return ea2, final, diverged
