import numpy as np
import pytest

from components.median import (
    AmbientMatrix,
    Structure,
    WeightedSample,
    frobenius_median,
    spatial_median,
    tuple_frobenius_median,
    weighted_objective,
)
from tests.conftest import random_orthogonal
from utils.errors import InvalidInput


def test_single_point_is_its_own_median():
    result = spatial_median(WeightedSample(np.array([[1.0, 2.0]])))
    assert np.allclose(result.median, [1.0, 2.0])
    assert result.converged and result.iterations == 0


def test_symmetric_configuration_median_at_center(env_defaults):
    points = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    result = spatial_median(WeightedSample(points), tol=1e-12)
    assert result.converged
    assert np.allclose(result.median, [0.0, 0.0], atol=1e-8)


def test_median_resists_a_far_outlier(env_defaults, rng):
    points = rng.standard_normal((50, 3)) * 0.1
    points[0] = [1e6, 1e6, 1e6]
    result = spatial_median(WeightedSample(points))
    assert np.linalg.norm(result.median) < 0.5


def test_objective_is_monotone(env_defaults, rng):
    points = rng.standard_normal((40, 4))
    result = spatial_median(WeightedSample(points))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(result.history, result.history[1:]))
    assert np.isclose(result.objective, weighted_objective(points, np.full(40, 1 / 40), result.median))


def test_heavy_data_point_is_an_anchor(env_defaults):
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    weights = np.array([0.7, 0.1, 0.1, 0.1])
    result = spatial_median(WeightedSample(points, weights), init=np.array([0.0, 0.0]))
    assert result.anchor_index == 0
    assert np.allclose(result.median, [0.0, 0.0])


def test_colinear_even_sample_flags_nonunique(env_defaults):
    points = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    result = spatial_median(WeightedSample(points))
    assert result.nonunique
    assert 1.0 <= result.median[0] <= 2.0


def test_iteration_cap_reports_nonconvergence(rng):
    result = spatial_median(WeightedSample(rng.standard_normal((30, 3))), tol=1e-300, max_iter=3)
    assert not result.converged
    assert result.iterations == 3


def test_weights_must_sum_to_one():
    with pytest.raises(InvalidInput):
        WeightedSample(np.zeros((2, 2)), np.array([0.5, 0.6]))
    with pytest.raises(InvalidInput):
        WeightedSample(np.array([[np.inf, 0.0]]))


def test_mixture_weights():
    sample = WeightedSample.mixture(np.zeros((4, 2)), np.ones(2), 0.2)
    assert np.allclose(sample.weights, [0.2, 0.2, 0.2, 0.2, 0.2])
    assert sample.points.shape == (5, 2)


def test_frobenius_median_keeps_structure(rng):
    data = []
    for _ in range(10):
        A = rng.standard_normal((3, 3))
        data.append(AmbientMatrix(A + A.T, Structure.SYMMETRIC))
    result = frobenius_median(data)
    assert result.median.structure is Structure.SYMMETRIC
    assert np.allclose(result.median.values, result.median.values.T)


def test_frobenius_median_rejects_mixed_shapes():
    with pytest.raises(InvalidInput):
        frobenius_median([AmbientMatrix(np.eye(2)), AmbientMatrix(np.eye(3))])


def test_tuple_median_returns_tuple(rng):
    data = []
    for _ in range(8):
        blocks = []
        for _ in range(2):
            A = rng.standard_normal((3, 3))
            blocks.append(A + A.T)
        data.append(np.stack(blocks))
    result = tuple_frobenius_median(data)
    assert result.median.structure is Structure.SYMMETRIC_TUPLE
    assert result.median.values.shape == (2, 3, 3)


def test_median_moves_with_translations(env_defaults, rng):
    points = rng.standard_normal((25, 3))
    shift = rng.standard_normal(3) * 5.0
    base = spatial_median(WeightedSample(points), tol=1e-13)
    moved = spatial_median(WeightedSample(points + shift), tol=1e-13)
    assert np.allclose(moved.median, base.median + shift, atol=1e-9)


def test_median_rotates_with_the_data(env_defaults, rng):
    points = rng.standard_normal((25, 3))
    Q = random_orthogonal(rng, 3)
    base = spatial_median(WeightedSample(points), tol=1e-13)
    rotated = spatial_median(WeightedSample(points @ Q.T), tol=1e-13)
    assert np.allclose(rotated.median, Q @ base.median, atol=1e-9)
