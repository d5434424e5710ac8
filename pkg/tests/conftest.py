import os

import pytest
from hypothesis import HealthCheck, settings

from twistcx.exact_linalg import GF, QQ

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.register_profile("thorough", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIELDS = [QQ, GF(101), GF(2)]


@pytest.fixture(scope="session", params=[QQ, GF(101)], ids=["QQ", "GF101"])
def fld(request):
    return request.param


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
