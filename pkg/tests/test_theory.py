import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnlms_lab import (
    Algorithm,
    Ar1Process,
    CorrelationModel,
    InvalidArgumentError,
    NoConvergenceError,
    PredictedInstabilityError,
    SystemModel,
    build_correlation,
    classify_support,
    emse_bias_term,
    generate_ar1,
    predict,
    predict_emse_exponential,
    predict_emse_nnlms,
    predict_emse_normalized,
    predict_emse_signsign,
    solve_constrained_wiener,
)
from nnlms_lab.theory import kkt_residuals

from conftest import TAP_WEIGHTS
from oracles import autocovariance, enumerate_nnls, lms_emse_per_tap, random_pd_toeplitz


def _corr(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return CorrelationModel(matrix, float(matrix[0, 0]))


# correlation ---------------------------------------------------------------

def test_white_correlation():
    np.testing.assert_array_equal(build_correlation(Ar1Process(0.0, 2.0), 4).matrix, 2.0 * np.eye(4))


def test_ar_correlation_against_empirical_autocovariance():
    corr = build_correlation(Ar1Process(0.5, 0.75), 2)
    np.testing.assert_allclose(corr.matrix, [[1.0, 0.5], [0.5, 1.0]])
    x = generate_ar1(Ar1Process(0.5, 0.75, seed=99), 10**7)
    emp = [autocovariance(x, 0), autocovariance(x, 1)]
    np.testing.assert_allclose(emp, corr.matrix[0], rtol=0.01)


def test_ref_correlation_spectrum(ref_corr):
    eig = np.linalg.eigvalsh(ref_corr.matrix)
    assert eig.min() > 0.3
    np.testing.assert_array_equal(np.diag(ref_corr.matrix), np.ones(15))
    np.testing.assert_array_equal(ref_corr.matrix, ref_corr.matrix.T)


def test_correlation_errors():
    with pytest.raises(InvalidArgumentError):
        build_correlation(Ar1Process(0.5, 0.75), 0)
    with pytest.raises(InvalidArgumentError):
        CorrelationModel(np.array([[1.0, 0.2], [0.3, 1.0]]), 1.0)


# constrained Wiener solution ------------------------------------------------

def test_feasible_optimum_returned_exactly(ref_corr):
    a = np.array([0.8, 0.6, 0.5, 0.4, 0.3] * 3)
    np.testing.assert_array_equal(solve_constrained_wiener(SystemModel(a, 0.01), ref_corr), a)


def test_white_input_clipping():
    sol = solve_constrained_wiener(SystemModel([0.8, -0.05], 0.0), _corr(np.eye(2)))
    np.testing.assert_allclose(sol, [0.8, 0.0], atol=1e-15)
    assert sol[1] == 0.0


def test_ref_system_against_enumeration(ref_system, ref_corr):
    sol = solve_constrained_wiener(ref_system, ref_corr)
    oracle = enumerate_nnls(ref_corr.matrix, ref_system.true_weights)
    np.testing.assert_allclose(sol, oracle, atol=1e-10)
    assert np.all(sol[12:] == 0.0)
    pos, zero = classify_support(sol, 1e-6 * sol.max())
    assert len(zero) >= 3 and {12, 13, 14} <= set(zero)
    res = kkt_residuals(sol, ref_system.true_weights, ref_corr)
    assert max(res.values()) <= 1e-10


def test_random_instances_match_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        R = random_pd_toeplitz(rng, n)
        a = rng.uniform(-1, 1, n)
        sol = solve_constrained_wiener(SystemModel(a, 0.0), _corr(R))
        np.testing.assert_allclose(sol, enumerate_nnls(R, a), atol=1e-8)


def test_non_pd_rejected():
    R = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(InvalidArgumentError):
        solve_constrained_wiener(SystemModel([0.5, -0.5], 0.0), _corr(R))


def test_order_mismatch(ref_corr):
    with pytest.raises(InvalidArgumentError):
        solve_constrained_wiener(SystemModel([0.5, -0.5], 0.0), ref_corr)


def test_swap_cap():
    R = build_correlation(Ar1Process(0.9, 0.19), 6).matrix
    a = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
    with pytest.raises(NoConvergenceError):
        solve_constrained_wiener(SystemModel(a, 0.0), _corr(R), max_swaps=0)


# support and bias ------------------------------------------------------------

def test_classify_support():
    assert classify_support(np.array([0.8, 0.0]), 1e-8) == ((0,), (1,))
    assert classify_support(np.array([0.8, 0.6]), 1e-8)[1] == ()
    with pytest.raises(InvalidArgumentError):
        classify_support(np.array([0.8]), 0.0)


def test_bias_term_examples():
    assert emse_bias_term(np.zeros(15), _corr(np.eye(15))) == 0.0
    a = np.array(TAP_WEIGHTS)
    v = np.where(a < 0, -a, 0.0)
    assert emse_bias_term(v, _corr(np.eye(15))) == pytest.approx(0.0055, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4).filter(lambda v: max(map(abs, v)) > 1e-3))
def test_bias_term_positive(v):
    corr = build_correlation(Ar1Process(0.7, 1.0), 4)
    assert emse_bias_term(np.array(v), corr) > 0


def test_bias_zero_iff_feasible():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        corr = _corr(random_pd_toeplitz(rng, n))
        a = rng.uniform(-1, 1, n)
        model = SystemModel(a, 0.01)
        pred = predict(Algorithm("NNLMS", 0.001), model, corr)
        assert (pred.emse_bias == 0.0) == bool(np.all(a >= 0))


# predictors ------------------------------------------------------------------

def test_nnlms_scalar_example():
    p = predict_emse_nnlms(0.1, 0.01, _corr([[1.0]]), [1.0], [1.0])
    assert p.emse_total == pytest.approx(0.001 / 1.9, rel=1e-14)
    assert p.emse_bias == 0.0


def test_exponential_scalar_example():
    p = predict_emse_exponential(0.1, 0.5, 0.01, _corr([[1.0]]), [0.25], [0.25])
    assert p.trace_term == pytest.approx(0.5)
    assert p.emse_total == pytest.approx(5e-4 / 1.95, rel=1e-14)


def test_signsign_scalar_example():
    p = predict_emse_signsign(0.01, 0.01, _corr([[1.0]]), [1.0], [1.0], input_std=1.0)
    assert p.emse_total == pytest.approx(0.01 * math.pi / 4 * 0.1, rel=1e-14)
    assert p.emse_total == pytest.approx(7.854e-4, rel=1e-4)


def test_normalized_equivalent_step(ref_system, ref_corr):
    a_o = solve_constrained_wiener(ref_system, ref_corr)
    a = predict_emse_normalized(0.15, 0.01, ref_corr, a_o, ref_system.true_weights)
    b = predict_emse_nnlms(0.01, 0.01, ref_corr, a_o, ref_system.true_weights)
    assert a.effective_step == pytest.approx(0.01)
    assert a.emse_total == b.emse_total


@pytest.mark.parametrize("fn", ["nnlms", "exponential", "signsign", "normalized"])
def test_zero_step_limit(fn, ref_system, ref_corr):
    a_o = solve_constrained_wiener(ref_system, ref_corr)
    args = (ref_corr, a_o, ref_system.true_weights)
    pred = {
        "nnlms": lambda: predict_emse_nnlms(0.0, 0.01, *args),
        "normalized": lambda: predict_emse_normalized(0.0, 0.01, *args),
        "exponential": lambda: predict_emse_exponential(0.0, 0.5, 0.01, *args),
        "signsign": lambda: predict_emse_signsign(0.0, 0.01, *args),
    }[fn]()
    assert pred.emse_total == pred.emse_bias > 0


def test_prediction_structure(ref_system, ref_corr):
    p = predict(Algorithm("NNLMS", 0.01), ref_system, ref_corr)
    assert sorted(p.positive_set + p.zero_set) == list(range(15))
    assert np.all(p.mean_weights[list(p.zero_set)] == 0.0)
    assert np.all(p.mean_weights[list(p.positive_set)] > 0.0)
    assert p.emse_total == p.emse_fluctuation + p.emse_bias
    assert p.emse_bias == pytest.approx(p.bias_vector @ ref_corr.matrix @ p.bias_vector, rel=1e-14)
    assert p.trace_term == pytest.approx(p.mean_weights.sum())


@pytest.mark.parametrize("alg", [
    Algorithm("NNLMS", 0.01), Algorithm("NormalizedNNLMS", 0.15),
    Algorithm("ExponentialNNLMS", 0.01, exponent=0.5), Algorithm("SignSignNNLMS", 0.01),
])
def test_total_exceeds_bias(alg, ref_system, ref_corr):
    p = predict(alg, ref_system, ref_corr)
    assert p.emse_total >= p.emse_bias >= 0


def test_exponential_gamma_one_is_nnlms(ref_system, ref_corr):
    a = predict(Algorithm("ExponentialNNLMS", 0.01, exponent=1.0), ref_system, ref_corr)
    b = predict(Algorithm("NNLMS", 0.01), ref_system, ref_corr)
    assert a.emse_total == b.emse_total


def test_lms_formula_on_grid():
    # EMSE-inf = 0: the closed form is the classic LMS result with per-tap steps eta * a_i
    rng = np.random.default_rng(8)
    for _ in range(200):
        n = int(rng.integers(1, 10))
        corr = _corr(random_pd_toeplitz(rng, n))
        a = rng.uniform(0.05, 1.0, n)
        s2 = rng.uniform(0.0, 0.1)
        eta = rng.uniform(0.0, 1.9) / float(a @ np.diag(corr.matrix))
        p = predict_emse_nnlms(eta, s2, corr, a, a)
        assert p.emse_total == pytest.approx(lms_emse_per_tap(eta * a, corr.matrix, s2), rel=1e-12, abs=1e-300)


def test_instability_error(ref_system, ref_corr):
    with pytest.raises(PredictedInstabilityError) as info:
        predict(Algorithm("NNLMS", 1.0), ref_system, ref_corr)
    assert info.value.step_size == 1.0
    with pytest.raises(PredictedInstabilityError):
        predict(Algorithm("ExponentialNNLMS", 5.0, exponent=0.5), ref_system, ref_corr)


def test_predictor_argument_errors(ref_corr):
    with pytest.raises(InvalidArgumentError):
        predict_emse_nnlms(-0.1, 0.01, ref_corr, np.ones(15), np.ones(15))
    with pytest.raises(InvalidArgumentError):
        predict_emse_nnlms(0.1, 0.01, ref_corr, np.ones(3), np.ones(3))
    with pytest.raises(InvalidArgumentError):
        predict_emse_signsign(0.1, 0.01, ref_corr, np.ones(15), np.ones(15), input_std=0.0)


def test_plain_lms_prediction(ref_system, ref_corr):
    p = predict(Algorithm("PlainLMS", 0.01), ref_system, ref_corr)
    assert p.emse_bias == 0.0
    assert p.emse_total == pytest.approx(0.01 * 0.01 * 15 / (2 - 0.01 * 15))


def test_empirical_mean_weights_threshold(ref_system, ref_corr):
    a_o = solve_constrained_wiener(ref_system, ref_corr)
    noisy = a_o + np.where(a_o == 0, 1e-9, 0.0)
    p = predict(Algorithm("NNLMS", 0.01), ref_system, ref_corr, mean_weights=noisy)
    q = predict(Algorithm("NNLMS", 0.01), ref_system, ref_corr)
    assert p.zero_set == q.zero_set
    assert p.emse_total == pytest.approx(q.emse_total, rel=1e-12)
