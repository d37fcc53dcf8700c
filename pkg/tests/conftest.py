import numpy as np
import pytest

from robust_sof.synthesis import SynthesisRequest, synth_corollary1
from robust_sof.system import benchmark_system


@pytest.fixture(scope="session")
def plant():
    return benchmark_system()


@pytest.fixture(scope="session")
def design(plant):
    """Corollary-1 design on the five-state plant at mu = 2.5 (computed once)."""
    res = synth_corollary1(plant, SynthesisRequest())
    assert res.ok, res.solution.message
    return res


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion and assert on it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
