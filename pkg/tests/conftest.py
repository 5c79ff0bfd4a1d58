import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pactree.code import PACCode
from pactree.construction import rm_profile

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance verdicts, filled in by test_acceptance.py: number -> (passed, detail)
VERDICTS: dict = {}


@pytest.fixture(scope="session")
def pac128():
    return PACCode(rm_profile(128, 64))


@pytest.fixture(scope="session")
def polar128():
    return PACCode(rm_profile(128, 64), g="1")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        ok, detail = VERDICTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
