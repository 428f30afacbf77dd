import numpy as np
import pytest

from holoproj.chart import ChartPoint


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def origin(n, chart=0):
    return ChartPoint(chart, np.zeros(2 * (n - 1)))
