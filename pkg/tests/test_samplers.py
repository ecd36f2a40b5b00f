import numpy as np
import pytest

from components.proj_stiefel import ProjStiefelPoint, frame_angular_errors
from components.samplers import (
    SHAPE_CONFIGS,
    ComplexBinghamParams,
    FrameWatsonParams,
    RngSeed,
    configuration_from_preshape,
    contaminate,
    frame_outlier,
    helmert_submatrix,
    make_rng,
    preshape,
    sample_complex_bingham,
    sample_frame_watson,
    shape_outliers,
)
from utils.errors import InvalidInput


def test_streams_are_reproducible_and_independent():
    a = make_rng(42, 1, 2).standard_normal(5)
    b = make_rng(42, 1, 2).standard_normal(5)
    c = make_rng(42, 1, 3).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    seed = RngSeed(42, (1,))
    assert np.array_equal(seed.child(2).generator().standard_normal(5), a)


def test_helmert_rows_orthonormal_and_centering():
    H = helmert_submatrix(5)
    assert np.allclose(H @ H.T, np.eye(4))
    assert np.allclose(H @ np.ones(5), 0.0)
    assert np.isclose(H[0, 0], 1 / np.sqrt(2))
    with pytest.raises(InvalidInput):
        helmert_submatrix(1)


def test_preshape_invariance():
    c = SHAPE_CONFIGS[1]
    z = preshape(c)
    assert np.isclose(np.linalg.norm(z), 1.0)
    assert np.allclose(preshape(3.0 * c + (1 - 2j)), z)
    centred = configuration_from_preshape(z)
    assert np.isclose(centred.sum(), 0.0)
    with pytest.raises(InvalidInput):
        preshape(np.ones(4, dtype=complex))


@pytest.mark.parametrize("shape, size", [(1, 3), (2, 5), (3, 12)])
def test_shape_configs_dimensions(shape, size):
    assert preshape(SHAPE_CONFIGS[shape]).size == size


def test_complex_bingham_concentrates_at_mode():
    z0 = preshape(SHAPE_CONFIGS[2])
    X = sample_complex_bingham(ComplexBinghamParams.from_mode(z0, 150.0), 500, make_rng(1))
    assert X.shape == (500, 5)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)
    cosines = np.abs(X @ z0.conj())
    # E[1 - |z0^* x|^2] is about (p - 1) / kappa for large kappa
    assert np.mean(1 - cosines**2) == pytest.approx(4 / 150.0, rel=0.2)


def test_complex_bingham_shift_invariance():
    z0 = preshape(SHAPE_CONFIGS[1])
    params = ComplexBinghamParams.from_mode(z0, 50.0)
    shifted = ComplexBinghamParams(params.Lambda + 7.0 * np.eye(3))
    a = sample_complex_bingham(params, 50, make_rng(3))
    b = sample_complex_bingham(shifted, 50, make_rng(3))
    assert np.allclose(np.abs(a @ z0.conj()), np.abs(b @ z0.conj()))


def test_complex_bingham_uniform_when_flat():
    X = sample_complex_bingham(ComplexBinghamParams(np.zeros((3, 3))), 20, make_rng(2))
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)


def test_shape_outliers_orthogonal_to_mode():
    z0 = preshape(SHAPE_CONFIGS[3])
    X = shape_outliers(z0, 10, make_rng(5))
    assert X.shape == (10, 12)
    assert np.allclose(X @ z0.conj(), 0.0, atol=1e-12)
    assert shape_outliers(z0, 0, make_rng(5)).shape == (0, 12)


def test_frame_watson_draws_are_orthogonal_and_concentrated():
    mode = ProjStiefelPoint.from_matrix(np.eye(3), canonical=False)
    draws = sample_frame_watson(FrameWatsonParams((50.0, 50.0, 50.0), mode), 60, make_rng(9), burn_in=300)
    assert draws.matrices.shape == (60, 3, 3)
    for X in draws.matrices:
        assert np.allclose(X.T @ X, np.eye(3), atol=1e-10)
    errors = np.array([frame_angular_errors(X, np.eye(3)) for X in draws.matrices])
    assert np.median(errors) < 0.3
    assert draws.thinning >= 1
    assert 0 < draws.acceptance_rate <= 1
    assert len(draws.frames()) == 60


def test_frame_watson_reproducible():
    params = FrameWatsonParams((5.0, 5.0, 5.0), ProjStiefelPoint.from_matrix(np.eye(3)))
    a = sample_frame_watson(params, 10, make_rng(4), burn_in=100)
    b = sample_frame_watson(params, 10, make_rng(4), burn_in=100)
    assert np.array_equal(a.matrices, b.matrices)


def test_frame_watson_params_validation():
    mode = ProjStiefelPoint.from_matrix(np.eye(3))
    with pytest.raises(InvalidInput):
        FrameWatsonParams((5.0, -1.0, 5.0), mode)
    with pytest.raises(InvalidInput):
        FrameWatsonParams((5.0, 5.0), mode)


def test_frame_outlier_is_orthogonal_and_far():
    M = frame_outlier().matrix
    assert np.allclose(M.T @ M, np.eye(3))
    assert np.all(frame_angular_errors(M, np.eye(3)) > 0.5)


def test_contaminate_replaces_exactly_n1():
    sample = np.zeros((10, 2))
    out, indices = contaminate(sample, np.ones(2), 3, make_rng(8))
    assert len(indices) == 3
    assert np.array_equal(np.flatnonzero(out[:, 0] == 1.0), indices)
    assert np.all(sample == 0.0)
    same, none = contaminate(sample, np.ones(2), 0, make_rng(8))
    assert none.size == 0 and np.array_equal(same, sample)
    with pytest.raises(InvalidInput):
        contaminate(sample, np.ones(2), 11, make_rng(8))


def test_contaminate_with_callable_source():
    sample = np.zeros((6, 3))
    out, indices = contaminate(sample, lambda count, rng: np.full((count, 3), 2.0), 2, make_rng(1))
    assert np.all(out[indices] == 2.0)
