from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

from maxmono.core import GraphPair, OperatorGraph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def F(*vals):
    return [Fraction(v) for v in vals]


def graph_1d(pairs):
    """Exact 1-D graph from ``(x, x*)`` number pairs."""
    return OperatorGraph([GraphPair([Fraction(x)], [Fraction(s)]) for x, s in pairs])


def rotation_graph_points(points):
    return OperatorGraph([GraphPair(F(*p), F(p[1], -p[0])) for p in points])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def rotation3():
    return rotation_graph_points([(1, 1), (0, 1), (1, 0)])
