import os

import pytest
from hypothesis import HealthCheck, settings

from skewret.reference import REFERENCE_PARAMS

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=sorted(REFERENCE_PARAMS))
def reference_model(request):
    return REFERENCE_PARAMS[request.param]


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, passed: bool | None, detail: str) -> bool | None:
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {status}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
