import math

import pytest

from cipher_region import Channel, DistortionMeasure, Pmf, SystemSpec

ACCEPTANCE_LINES = []


def hb(p):
    """Closed-form binary entropy, kept apart from the package on purpose."""
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@pytest.fixture
def bss_spec():
    return SystemSpec(Pmf.uniform(2), Channel.bsc(0.1), DistortionMeasure.hamming(2), 1.0)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title} {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
