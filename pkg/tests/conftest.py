import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from octspec.cdnum import CdNumber

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def cd_numbers(v):
    return st.lists(finite, min_size=1 << v, max_size=1 << v).map(lambda c: CdNumber(c))


def nonzero_cd_numbers(v):
    return cd_numbers(v).filter(lambda z: z.norm() > 1e-3)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    def log(k, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
