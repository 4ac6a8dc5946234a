import numpy as np
import pytest

from nnlms_lab import Ar1Process, SystemModel, build_correlation

TAP_WEIGHTS = [0.8, 0.6, 0.5, -0.05, 0.4, -0.04, 0.3, -0.03, 0.2, -0.02, 0.1, -0.01, 0.0, 0.0, 0.0]

ACCEPTANCE_LINES = []


@pytest.fixture
def ref_system():
    return SystemModel(TAP_WEIGHTS, 0.01)


@pytest.fixture
def ref_process():
    return Ar1Process(0.5, 0.75, seed=7)


@pytest.fixture
def ref_corr(ref_process):
    return build_correlation(ref_process, 15)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_record():
    """Record a one-line verdict for the acceptance summary."""

    def record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
