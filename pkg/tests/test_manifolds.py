import numpy as np
import pytest

from components.manifolds import (
    CPPoint,
    GrassmannPoint,
    ManifoldKind,
    StiefelPoint,
    angular_error,
    extrinsic_distance,
    pfm,
    project,
    project_cp,
    project_grassmann,
    project_stiefel,
)
from tests.conftest import random_orthogonal, random_unit_complex
from utils.errors import DegenerateProjection, InvalidInput, NotConverged


def test_membership_checks():
    with pytest.raises(InvalidInput):
        StiefelPoint(np.ones((3, 2)))
    with pytest.raises(InvalidInput):
        GrassmannPoint(np.eye(3), 2)
    with pytest.raises(InvalidInput):
        CPPoint(np.eye(2, dtype=complex))


def test_project_stiefel_is_polar_factor(rng):
    A = rng.standard_normal((4, 2))
    X = project_stiefel(A).matrix
    assert np.allclose(X.T @ X, np.eye(2))
    # the polar factor satisfies A = X P with P symmetric positive definite
    P = X.T @ A
    assert np.allclose(P, P.T)
    assert np.all(np.linalg.eigvalsh(P) > 0)


def test_project_stiefel_fixes_manifold_points(rng):
    X = random_orthogonal(rng, 4)[:, :3]
    assert np.allclose(project_stiefel(X).matrix, X)


def test_project_stiefel_rank_deficient():
    with pytest.raises(DegenerateProjection):
        project_stiefel(np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]))


def test_project_grassmann_leading_eigenspace():
    A = np.diag([3.0, 2.0, 1.0, 0.0])
    Y = project_grassmann(A, 2)
    assert Y.rank == 2
    assert np.allclose(Y.matrix, np.diag([1.0, 1.0, 0.0, 0.0]))


def test_project_grassmann_ties_inside_leading_block_are_fine():
    Y = project_grassmann(np.diag([2.0, 2.0, 1.0]), 2)
    assert np.allclose(Y.matrix, np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(DegenerateProjection):
        project_grassmann(np.diag([2.0, 1.0, 1.0]), 2)
    with pytest.raises(InvalidInput):
        project_grassmann(np.eye(3), 4)


def test_project_cp_leading_eigenvector(rng):
    z = random_unit_complex(rng, 3)
    A = 2.0 * np.outer(z, z.conj()) + 0.1 * np.eye(3)
    point = project_cp(A)
    assert np.isclose(abs(np.vdot(point.vector, z)), 1.0)
    with pytest.raises(DegenerateProjection):
        project_cp(np.eye(3, dtype=complex))


def test_project_dispatch():
    assert isinstance(project(np.eye(3)[:, :2], ManifoldKind.STIEFEL), StiefelPoint)
    assert isinstance(project(np.diag([2.0, 1.0, 0.0]), "grassmann", 1), GrassmannPoint)


def test_pfm_of_identical_points_returns_the_point(rng):
    X = random_orthogonal(rng, 3)[:, :2]
    point, result = pfm([StiefelPoint(X)] * 5)
    assert np.allclose(point.matrix, X)
    assert result.converged


@pytest.mark.parametrize("fixture_name", ["stiefel_sample", "grassmann_sample"])
def test_pfm_close_to_center(request, fixture_name):
    center, points = request.getfixturevalue(fixture_name)
    point, result = pfm(points)
    assert result.converged
    if isinstance(point, StiefelPoint):
        assert np.linalg.norm(point.matrix - center) < 0.2
    else:
        assert np.linalg.norm(point.matrix - center @ center.T) < 0.2


def test_pfm_cp_recovers_mode(cp_sample):
    z0, points, _ = cp_sample
    point, _ = pfm(points)
    assert angular_error(point.vector, z0) < 0.1


def test_pfm_rejects_mixed_types(rng):
    with pytest.raises(InvalidInput):
        pfm([StiefelPoint(np.eye(3)[:, :2]), GrassmannPoint.from_basis(np.eye(3)[:, :2])])
    with pytest.raises(InvalidInput):
        pfm([])


def test_pfm_require_convergence(stiefel_sample):
    _, points = stiefel_sample
    with pytest.raises(NotConverged):
        pfm(points, tol=1e-300, max_iter=2, require_convergence=True)


def test_angular_error_is_phase_invariant(rng):
    z = random_unit_complex(rng, 4)
    assert np.isclose(angular_error(np.exp(0.7j) * z, z), 0.0, atol=1e-7)
    w = np.zeros(4, dtype=complex)
    w[0] = 1.0
    v = np.zeros(4, dtype=complex)
    v[1] = 1.0
    assert np.isclose(angular_error(w, v), np.pi / 2)


def test_extrinsic_distance():
    a = GrassmannPoint.from_basis(np.eye(3)[:, :1])
    b = GrassmannPoint.from_basis(np.eye(3)[:, 1:2])
    assert np.isclose(extrinsic_distance(a, b), np.sqrt(2.0))
    with pytest.raises(InvalidInput):
        extrinsic_distance(a, StiefelPoint(np.eye(3)[:, :1]))


def _random_unitary(rng, k):
    v = random_unit_complex(rng, k)
    phases = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=k))
    return (np.eye(k) - 2.0 * np.outer(v, v.conj())) @ np.diag(phases)


def _move(point, rng):
    """Random isometry of the ambient space that maps the manifold of point onto itself"""
    if isinstance(point, StiefelPoint):
        Q, R = random_orthogonal(rng, point.k), random_orthogonal(rng, point.r)
        return lambda A: Q @ A @ R.T
    if isinstance(point, GrassmannPoint):
        Q = random_orthogonal(rng, point.k)
        return lambda A: Q @ A @ Q.T
    U = _random_unitary(rng, point.k)
    return lambda A: U @ A @ U.conj().T


def _rebuild(point, matrix):
    if isinstance(point, GrassmannPoint):
        return GrassmannPoint(matrix, point.rank)
    return type(point)(matrix)


@pytest.mark.parametrize("fixture_name", ["stiefel_sample", "grassmann_sample", "cp_sample"])
def test_pfm_commutes_with_isometries(request, rng, env_defaults, fixture_name):
    points = request.getfixturevalue(fixture_name)[1]
    move = _move(points[0], rng)
    estimate, _ = pfm(points, tol=1e-13)
    moved, result = pfm([_rebuild(p, move(p.matrix)) for p in points], tol=1e-13)
    assert result.converged
    assert np.allclose(moved.matrix, move(estimate.matrix), atol=1e-8)
