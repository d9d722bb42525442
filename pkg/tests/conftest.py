import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402

from mtclm.data import MtclmParams, OrdinalDataset  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FROZEN = Path(__file__).parent / "frozen" / "oracle_values.json"


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN.read_text())


def instance(seed, n, p, k_max=3, scale=1.0):
    """(dataset, params) from the oracle generator."""
    rng = np.random.default_rng(seed)
    x, y, a, b, z, g = oracles.random_instance(rng, n, p, k_max, scale)
    return OrdinalDataset(x, y, k_max), MtclmParams(a, b, z, g)


@pytest.fixture
def small():
    return instance(0, 40, 4)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    """Record and print the one-line verdict of an acceptance criterion."""
    line = f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
