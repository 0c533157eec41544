from pathlib import Path

import numpy as np
import pytest

from fairsel import resources
from fairsel.data import load_dataset, split

ROOT = Path(__file__).resolve().parents[1]
UCI = ROOT / "data" / "uci"


@pytest.fixture(scope="session")
def german_sample():
    return load_dataset(resources.path("german_sample"))


@pytest.fixture(scope="session")
def adult_sample():
    return load_dataset(resources.path("adult_sample"))


@pytest.fixture(scope="session")
def german_full():
    return load_dataset(UCI / "german.yaml")


@pytest.fixture(scope="session")
def german_split(german_full):
    return split(german_full, seed=0, train_fraction=0.7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class StubRng:
    """Replays scripted draws for ``integers`` / ``random`` / ``choice``."""

    def __init__(self, integers=(), random=(), choice=()):
        self._ints = list(integers)
        self._floats = list(random)
        self._choices = list(choice)

    def integers(self, low, high=None, size=None):
        return self._ints.pop(0)

    def random(self, size=None):
        return self._floats.pop(0)

    def choice(self, a, size=None, replace=True):
        return np.asarray(self._choices.pop(0))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
