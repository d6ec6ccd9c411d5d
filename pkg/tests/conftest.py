import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: list[str] = []


def ulp_close(actual, expected, ulps=4, scale=None):
    """Elementwise |actual - expected| <= ulps * spacing(reference).

    The reference is the expected element itself, or ``scale`` (an array of
    per-row magnitudes) when given.
    """
    actual, expected = np.asarray(actual, float), np.asarray(expected, float)
    ref = np.abs(expected) if scale is None else np.broadcast_to(np.asarray(scale, float), expected.shape)
    return bool(np.all(np.abs(actual - expected) <= ulps * np.spacing(ref)))


@pytest.fixture
def acceptance_line():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"acceptance {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        _ACCEPTANCE.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
