import numpy as np
import pytest

from randpivot import ProcessSpec, WeightScheme

# (label, passed, detail) triples filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def record_acceptance(label: str, passed: bool, detail: str) -> None:
    line = f"{label}: {'PASS' if passed else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ar1_lognormal():
    return ProcessSpec.ar1(0.8, "lognormal")


@pytest.fixture
def fid_lognormal():
    return ProcessSpec.fid(0.4, "lognormal")


@pytest.fixture
def bern():
    return WeightScheme.bernoulli(0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
