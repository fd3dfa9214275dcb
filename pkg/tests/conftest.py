import itertools
import math

import numpy as np
import pytest


def brute_force_pmf(n, log_weight):
    """Independent 2^n sweep: returns (probs over +1 count, log Z)."""
    acc = np.zeros(n + 1)
    logs = []
    ks = []
    for x in itertools.product((-1, 1), repeat=n):
        logs.append(log_weight(np.array(x)))
        ks.append(x.count(1))
    logs = np.array(logs)
    top = logs.max()
    np.add.at(acc, ks, np.exp(logs - top))
    z = acc.sum()
    return acc / z, top + math.log(z)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def _report(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
