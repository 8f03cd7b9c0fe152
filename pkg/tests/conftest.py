import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_triangle_coords(rng, n):
    """``n`` random non-degenerate triangles, including very flat ones."""
    out = []
    while len(out) < n:
        c = rng.uniform(-1, 1, 6)
        # stretch some of them hard in a random direction to get needles and flat ones
        if rng.random() < 0.5:
            c[1::2] *= 10.0 ** rng.uniform(-4, 0)
        area = 0.5 * ((c[2] - c[0]) * (c[5] - c[1]) - (c[4] - c[0]) * (c[3] - c[1]))
        if abs(area) > 1e-10:
            out.append(c)
    return out


def random_standard(rng):
    """Random ``(alpha, theta)`` with cos(theta) <= alpha/2 and theta in [pi/3, pi)."""
    alpha = rng.uniform(0.05, 1.0)
    theta = rng.uniform(math.acos(alpha / 2), math.pi * (1 - 1e-6))
    return alpha, theta


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
