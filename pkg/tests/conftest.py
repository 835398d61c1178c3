import sys

import numpy as np
import pytest

from eventvfi import EventStream, FrameSequence
from eventvfi.scenes import translating_gradient, translating_square


def random_stream(rng, n, width=64, height=48, t_max=1_000_000):
    t = np.sort(rng.integers(0, t_max, n))
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    p = rng.choice(np.array([-1, 1]), n)
    return EventStream(width, height, t, x, y, p)


def random_frames(rng, n=3, height=12, width=10, rgb=False):
    shape = (height, width, 3) if rgb else (height, width)
    frames = [rng.integers(0, 256, shape) / 255.0 for _ in range(n)]
    ts = np.cumsum(rng.integers(1, 5000, n))
    return FrameSequence(frames, ts)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def square_scene():
    return translating_square()


@pytest.fixture(scope="session")
def gradient_scene():
    return translating_gradient()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
