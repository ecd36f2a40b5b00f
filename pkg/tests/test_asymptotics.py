import numpy as np
import pytest

from components.asymptotics import (
    build_state,
    confidence_statistic,
    empirical_hj,
    influence_ambient,
    influence_manifold,
    influence_norms,
    manifold_derivative,
    tangent_basis,
    tangent_coordinates,
    tangent_report,
)
from components.manifolds import CPPoint, ManifoldKind, pfm, project
from components.median import AmbientMatrix, Structure, frobenius_median
from components.samplers import ComplexBinghamParams, make_rng, sample_complex_bingham
from tests.conftest import random_unit_complex
from utils.errors import AnchorResidual, InvalidInput

SAMPLES = ["stiefel_sample", "grassmann_sample", "cp_sample"]


def _points(request, name):
    sample = request.getfixturevalue(name)
    return sample[1]


def _symmetric_perturbation(rng, state):
    shape = state.ambient.values.shape
    if state.kind is ManifoldKind.STIEFEL:
        return rng.standard_normal(shape)
    G = rng.standard_normal(shape)
    if state.kind is ManifoldKind.GRASSMANN:
        return G + G.T
    G = G + 1j * rng.standard_normal(shape)
    return G + G.conj().T


@pytest.mark.parametrize(
    "name, expected",
    [("stiefel_sample", 4 * 2 - 3), ("grassmann_sample", 2 * 2), ("cp_sample", 2)],
)
def test_tangent_dimensions(request, name, expected):
    report = tangent_report(_points(request, name))
    assert report.basis.dimension == expected
    if name == "cp_sample":
        assert report.covariance.C.shape == (2, 2)
        assert report.covariance.real_matrix.shape == (4, 4)
    else:
        assert report.covariance.C.shape == (expected, expected)


@pytest.mark.parametrize("name", SAMPLES)
def test_derivative_matches_finite_difference(request, rng, name):
    state = build_state(_points(request, name), tol=1e-13)
    dA = _symmetric_perturbation(rng, state)
    h = 1e-6
    A0 = state.ambient.values
    rank = state.rank if state.kind is ManifoldKind.GRASSMANN else None
    plus = project(A0 + h * dA, state.kind, rank).matrix
    minus = project(A0 - h * dA, state.kind, rank).matrix
    numeric = (plus - minus) / (2 * h)
    assert np.allclose(manifold_derivative(state, dA), numeric, atol=1e-5)


@pytest.mark.parametrize("name", SAMPLES)
def test_tangent_directions_are_tangent(request, name):
    state = build_state(_points(request, name))
    basis = tangent_basis(state.kind, state.spectral, state.rank)
    X = state.point.matrix
    k = X.shape[0]
    for j in range(basis.dimension):
        column = basis.columns[:, j]
        if state.kind is ManifoldKind.STIEFEL:
            delta = column.reshape(X.shape, order="F")
            assert np.allclose(X.T @ delta + delta.T @ X, 0.0, atol=1e-10)
        else:
            delta = column.reshape((k, k), order="F")
            # tangent to the projectors: delta = X delta + delta X
            assert np.allclose(X @ delta + delta @ X, delta, atol=1e-10)


@pytest.mark.parametrize("name", SAMPLES)
def test_covariance_is_mean_outer_product_of_influence(request, name):
    points = _points(request, name)
    report = tangent_report(points, tol=1e-13)
    coordinates = np.array(
        [tangent_coordinates(report.basis, influence_manifold(x, report.state)) for x in points]
    )
    empirical = coordinates.T @ coordinates / len(points)
    assert np.allclose(report.covariance.real_matrix, empirical, atol=1e-8 * max(1.0, np.abs(empirical).max()))


def test_ambient_influence_matches_contamination_derivative(cp_sample, rng):
    _, points, _ = cp_sample
    A0 = frobenius_median([p.to_ambient() for p in points], tol=1e-14).median
    hj = empirical_hj(points, A0)
    z = CPPoint.from_vector(random_unit_complex(rng, 3))
    eps = 1e-4
    n = len(points)
    weights = np.append(np.full(n, (1 - eps) / n), eps)
    contaminated = frobenius_median([p.to_ambient() for p in points + [z]], tol=1e-14, weights=weights).median
    numeric = (contaminated.values - A0.values) / eps
    assert np.allclose(influence_ambient(z, A0, hj).values, numeric, atol=1e-3 * max(1.0, np.abs(numeric).max()))


def test_anchor_residual_carries_index(stiefel_sample):
    _, points = stiefel_sample
    A0 = points[3].to_ambient()
    with pytest.raises(AnchorResidual) as info:
        empirical_hj(points, A0)
    assert info.value.index == 3


def test_influence_norms_bounded(stiefel_sample, rng):
    _, points = stiefel_sample
    state = build_state(points)
    norms = influence_norms(state, points[:5])
    assert norms.shape == (5,)
    assert np.all(np.isfinite(norms))


def test_confidence_statistic_at_the_estimate(cp_sample):
    _, points, _ = cp_sample
    fitted, _ = pfm(points)
    report = tangent_report(points, reference=fitted)
    check = confidence_statistic(report)
    assert check.dof == 4
    assert check.statistic == pytest.approx(0.0, abs=1e-12)
    assert check.inside
    assert report.complex_coordinates.shape == (2,)
    with pytest.raises(InvalidInput):
        confidence_statistic(tangent_report(points))


def test_ambient_input_is_rejected():
    with pytest.raises(InvalidInput):
        influence_ambient(np.eye(2), AmbientMatrix(np.eye(2), Structure.SYMMETRIC), None)


@pytest.mark.slow
def test_cp_covariance_matches_monte_carlo():
    z0 = np.array([1.0, 1.0j, 0.5]) / np.linalg.norm([1.0, 1.0, 0.5])
    params = ComplexBinghamParams.from_mode(z0, 30.0)
    n, replicates = 200, 300
    large = tangent_report([CPPoint.from_vector(x) for x in sample_complex_bingham(params, 20000, make_rng(7, 0))])
    reference, basis = large.point, large.basis
    coordinates, plug_ins = [], []
    for b in range(replicates):
        data = [CPPoint.from_vector(x) for x in sample_complex_bingham(params, n, make_rng(7, 2, b))]
        report = tangent_report(data)
        coordinates.append(tangent_coordinates(basis, report.point.matrix - reference.matrix))
        plug_ins.append(np.trace(report.covariance.real_matrix))
    empirical = n * np.trace(np.cov(np.array(coordinates).T))
    assert empirical == pytest.approx(np.mean(plug_ins), rel=0.25)
