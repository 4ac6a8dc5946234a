"""Independent reference computations used as test oracles.

None of these call into the code paths they check.
"""

import itertools

import numpy as np


def enumerate_nnls(R, true_weights):
    """Constrained Wiener solution by trying every active set.

    For each support ``P`` solve ``R_PP a_P = (R a*)_P`` and keep the
    feasible candidate (``a_P >= 0``) of least objective. The true minimiser
    is one of the candidates, so the feasible minimum is the global one.
    Candidates of equal size are solved as one batched system.
    """
    R = np.asarray(R, dtype=float)
    a_star = np.asarray(true_weights, dtype=float)
    n = a_star.size
    b = R @ a_star
    best, best_obj = np.zeros(n), 0.0
    for k in range(1, n + 1):
        idx = np.array(list(itertools.combinations(range(n), k)))
        sub = R[idx[:, :, None], idx[:, None, :]]
        sol = np.linalg.solve(sub, b[idx][..., None])[..., 0]
        feasible = np.all(sol >= -1e-13, axis=1)
        if not feasible.any():
            continue
        # objective a'Ra - 2b'a at a stationary point of the subproblem is -b_P'a_P
        obj = -np.einsum("ck,ck->c", b[idx], sol)
        obj[~feasible] = np.inf
        c = int(np.argmin(obj))
        if obj[c] < best_obj:
            best_obj = obj[c]
            best = np.zeros(n)
            best[idx[c]] = np.clip(sol[c], 0.0, None)
    return best


def lms_emse_per_tap(steps, R, noise_variance):
    """Classic LMS steady-state EMSE with a diagonal step matrix ``diag(steps)``."""
    M = np.diag(steps)
    t = np.trace(M @ np.asarray(R))
    return noise_variance * t / (2.0 - t)


def autocovariance(x, lag):
    x = np.asarray(x) - np.mean(x)
    return np.dot(x[: x.size - lag], x[lag:]) / (x.size - lag)


def random_pd_toeplitz(rng, n):
    """Random positive definite Toeplitz matrix.

    Alternates between AR(1) correlations and autocorrelations of a random
    FIR filter (plus a small ridge), which cover smooth and oscillating
    spectra.
    """
    if rng.random() < 0.5:
        pole = rng.uniform(-0.9, 0.9)
        var = rng.uniform(0.2, 3.0)
        col = var * pole ** np.arange(n)
    else:
        h = rng.standard_normal(rng.integers(1, 6))
        full = np.correlate(h, h, mode="full")[h.size - 1 :]
        col = np.zeros(n)
        m = min(n, full.size)
        col[:m] = full[:m]
        col[0] += rng.uniform(0.05, 0.5)
    i, j = np.indices((n, n))
    return col[np.abs(i - j)]
