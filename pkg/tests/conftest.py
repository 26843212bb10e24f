import numpy as np
import pytest

from liestep.lie_core import exp, skew_part


def random_skew(rng, n, norm=1.0):
    """Random skew matrix scaled to the requested Frobenius norm."""
    s = skew_part(rng.standard_normal((n, n)))
    return s * (norm / np.linalg.norm(s))


def random_rotation(rng, n, max_angle=2.0):
    """Random rotation with all angles strictly inside the log chart."""
    return exp(random_skew(rng, n, rng.uniform(0.05, max_angle)))


def fit_loglog_slope(xs, ys):
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
