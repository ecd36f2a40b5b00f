import numpy as np
import pytest

from components.manifolds import CPPoint, GrassmannPoint, StiefelPoint
from components.samplers import make_rng


def random_orthogonal(rng, k):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


def random_unit_complex(rng, p):
    z = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    return z / np.linalg.norm(z)


def perturbed_frames(rng, center, n, scale):
    """Frames near center: small random rotations applied on the left"""
    frames = []
    for _ in range(n):
        A = scale * rng.standard_normal(center.shape)
        Q, _ = np.linalg.qr(center + A)
        Q = Q * np.sign(np.sum(Q * center, axis=0))
        frames.append(Q)
    return np.stack(frames)


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def stiefel_sample(rng):
    center = random_orthogonal(rng, 4)[:, :2]
    points = []
    for _ in range(30):
        Q, _ = np.linalg.qr(center + 0.15 * rng.standard_normal(center.shape))
        points.append(StiefelPoint(Q * np.sign(np.sum(Q * center, axis=0))))
    return center, points


@pytest.fixture
def grassmann_sample(rng):
    center = random_orthogonal(rng, 4)[:, :2]
    points = []
    for _ in range(30):
        Q, _ = np.linalg.qr(center + 0.15 * rng.standard_normal(center.shape))
        points.append(GrassmannPoint.from_basis(Q))
    return center, points


@pytest.fixture
def cp_sample(rng):
    z0 = random_unit_complex(rng, 3)
    vectors = []
    for _ in range(40):
        z = z0 + 0.1 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        vectors.append(z / np.linalg.norm(z))
    return z0, [CPPoint.from_vector(z) for z in vectors], np.array(vectors)


@pytest.fixture
def env_defaults(monkeypatch):
    for name in (
        "PFM_LOG_LEVEL",
        "PFM_WORKERS",
        "PFM_OUTPUT_DIR",
        "PFM_DESK_REPLICATES",
        "PFM_FULL_REPLICATES",
        "PFM_BOOTSTRAP_B",
        "PFM_MEDIAN_TOL",
        "PFM_MEDIAN_MAX_ITER",
        "PFM_DEBUG_DESCENT",
    ):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("PFM_DEBUG_DESCENT", "1")
