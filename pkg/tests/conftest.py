import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vslam_observer import _kernels

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_RESULTS: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    _kernels.warmup()
    logging.getLogger("vslam_observer").setLevel(logging.ERROR)


@pytest.fixture
def rng(request):
    # stable per-test seed derived from the test name
    seed = sum(ord(c) * (i + 1) for i, c in enumerate(request.node.name)) % (2**32)
    return np.random.default_rng(seed)


@pytest.fixture
def acceptance():
    def report(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        print(line)
        ACCEPTANCE_RESULTS.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
