from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from typical_sets.geom_core import FinitePointSet


def unit_rationals(max_den=64):
    return st.fractions(min_value=0, max_value=1, max_denominator=max_den)


def exact_points(d, max_den=64):
    return st.tuples(*[unit_rationals(max_den)] * d)


def exact_sets(d, min_size=1, max_size=6, max_den=64):
    return st.lists(exact_points(d, max_den), min_size=min_size, max_size=max_size).map(
        lambda pts: FinitePointSet.of(pts, d)
    )


def random_exact_set(rng, d, size, den=32):
    pts = [tuple(Fraction(int(k), den) for k in rng.integers(0, den + 1, size=d)) for _ in range(size)]
    return FinitePointSet.of(pts, d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
