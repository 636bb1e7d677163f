from collections import deque
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES = []


class ScriptedRng:
    """Wraps a numpy Generator; scalar draws come from scripted queues while they last.

    ``integers`` is scripted only for scalar calls (no ``size``), ``random`` for
    calls with ``size`` (claim draws in UniqueIndex), ``uniform`` for any call.
    Everything else falls through to the real generator.
    """

    def __init__(self, seed=0, integers=(), random=(), uniform=()):
        self._gen = np.random.default_rng(seed)
        self.int_queue = deque(integers)
        self.random_queue = deque(random)
        self.uniform_queue = deque(uniform)
        self.random_sized_calls = 0

    def integers(self, low, high=None, size=None, dtype=np.int64):
        if size is None and self.int_queue:
            return self.int_queue.popleft()
        return self._gen.integers(low, high, size=size, dtype=dtype)

    def random(self, size=None):
        if size is not None:
            self.random_sized_calls += 1
            if self.random_queue:
                return np.asarray(self.random_queue.popleft(), dtype=float)
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        if self.uniform_queue:
            return np.asarray(self.uniform_queue.popleft(), dtype=float)
        return self._gen.uniform(low, high, size)

    def __getattr__(self, name):
        return getattr(self._gen, name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
