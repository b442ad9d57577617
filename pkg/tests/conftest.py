import os
import sys
import random

import pytest
from hypothesis import HealthCheck, settings

from gamemu import gen

settings.register_profile(
    "default", deadline=None, max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("long", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return random.Random(gen.seed_from_env())


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in list(sys.modules.items())
                if name.rsplit(".", 1)[-1] == "test_acceptance"), None)
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
