import numpy as np
import pytest

from mixpost._backend import _compiled, _fallback
from mixpost.measures import MixingMeasure

BACKENDS = [pytest.param(_fallback, id="python")]
if _compiled is not None:
    BACKENDS.insert(0, pytest.param(_compiled, id="compiled"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    """Each kernel module available in this build."""
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_spd(rng, d, cond=None):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    if cond is None:
        lam = rng.uniform(0.2, 3.0, size=d)
    else:
        lam = np.exp(rng.uniform(0.0, np.log(cond), size=d))
        lam[0], lam[-1] = 1.0, float(cond)
    return (Q * lam) @ Q.T


def random_measure(rng, K, d, spread=3.0, weights=None):
    w = rng.dirichlet(np.ones(K)) if weights is None else np.asarray(weights, dtype=float)
    means = spread * rng.standard_normal((K, d))
    covs = np.stack([random_spd(rng, d) for _ in range(K)])
    return MixingMeasure(w, means, covs)
