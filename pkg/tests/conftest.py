import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from milstroud import Bag


class ConstantScorer:
    descriptor = {"strangeness": "constant"}
    fitted = True

    def __init__(self, value=1.0):
        self.value = value

    def fit(self, bags):
        return self

    def score_bag(self, bag):
        return np.full(len(bag), self.value)


class TableScorer:
    """Scores each instance by a lookup of its first feature."""

    descriptor = {"strangeness": "first-feature"}
    fitted = True

    def fit(self, bags):
        return self

    def score_bag(self, bag):
        return np.abs(bag.as_array()[:, 0])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_bag(X, label=None, id=None):
    return Bag.from_array(np.asarray(X, dtype=float), label=label, id=id)


def pytest_terminal_summary(terminalreporter):
    """Print the per-criterion verdicts collected by test_acceptance."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
