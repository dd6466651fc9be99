import warnings

import numpy as np
import pytest
from hypothesis import settings

from qclab.errors import CompactSupportWarning

settings.register_profile("qclab", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("qclab")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion for the terminal summary."""

    def record(label: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def quiet_support():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CompactSupportWarning)
        yield


def rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
