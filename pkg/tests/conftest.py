import math

import pytest

from subharmonic import Domain, MetricScene, SignedMeasure

TWO_PI = 2 * math.pi


@pytest.fixture
def flat():
    return MetricScene(Domain(0j, 10.0))


def cone(w0, radius=2.0):
    return MetricScene(Domain(0j, radius), SignedMeasure.atom(0j, w0))
