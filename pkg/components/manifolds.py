"""
Manifold point types and projected Frobenius medians
Stiefel, Grassmann and complex projective points with membership checks,
the nearest-point projections from the ambient space, and the two-step PFM
estimator (ambient median, then projection).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from components.median import AmbientMatrix, MedianResult, Structure, frobenius_median
from components.spectral import herm_eig, svd, sym_eig
from utils.errors import DegenerateProjection, InvalidInput, NotConverged
from utils.validators import require_finite, require_unit

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-10
TRACE_TOL = 1e-8
SINGULAR_FLOOR = 1e-12
EIGENGAP_FLOOR = 1e-10


class ManifoldKind(str, Enum):
    STIEFEL = "stiefel"
    GRASSMANN = "grassmann"
    CP = "cp"


def _as_array(A):
    if isinstance(A, AmbientMatrix):
        return A.values
    if hasattr(A, "matrix"):
        return A.matrix
    return np.asarray(A)


@dataclass(frozen=True)
class StiefelPoint:
    """k x r matrix with orthonormal columns"""

    matrix: np.ndarray

    kind = ManifoldKind.STIEFEL

    def __post_init__(self):
        X = require_finite(self.matrix, "Stiefel matrix").astype(float)
        if X.ndim != 2 or X.shape[0] < X.shape[1]:
            raise InvalidInput(f"Stiefel point needs k >= r, got shape {X.shape}")
        if np.linalg.norm(X.T @ X - np.eye(X.shape[1])) > MEMBERSHIP_TOL:
            raise InvalidInput("columns are not orthonormal")
        object.__setattr__(self, "matrix", X)

    @property
    def k(self):
        return self.matrix.shape[0]

    @property
    def r(self):
        return self.matrix.shape[1]

    def to_ambient(self) -> AmbientMatrix:
        return AmbientMatrix(self.matrix, Structure.GENERAL)


@dataclass(frozen=True)
class GrassmannPoint:
    """Rank-r orthogonal projector Y = Y^T = Y^2"""

    matrix: np.ndarray
    rank: int

    kind = ManifoldKind.GRASSMANN

    def __post_init__(self):
        Y = require_finite(self.matrix, "Grassmann matrix").astype(float)
        if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
            raise InvalidInput(f"Grassmann point must be square, got shape {Y.shape}")
        if np.linalg.norm(Y - Y.T) > MEMBERSHIP_TOL or np.linalg.norm(Y @ Y - Y) > MEMBERSHIP_TOL:
            raise InvalidInput("matrix is not an orthogonal projector")
        if abs(np.trace(Y) - self.rank) > TRACE_TOL:
            raise InvalidInput(f"trace {np.trace(Y):.6g} does not match rank {self.rank}")
        object.__setattr__(self, "matrix", 0.5 * (Y + Y.T))

    @property
    def k(self):
        return self.matrix.shape[0]

    @classmethod
    def from_basis(cls, basis):
        """Projector onto the column span of an orthonormal k x r basis"""
        Q = np.asarray(basis, dtype=float)
        return cls(Q @ Q.T, Q.shape[1])

    def to_ambient(self) -> AmbientMatrix:
        return AmbientMatrix(self.matrix, Structure.SYMMETRIC)


@dataclass(frozen=True)
class CPPoint:
    """Rank-1 Hermitian idempotent zz* (Veronese-Whitney embedding of CP^{k-1})"""

    matrix: np.ndarray

    kind = ManifoldKind.CP

    def __post_init__(self):
        Z = require_finite(self.matrix, "CP matrix").astype(complex)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise InvalidInput(f"CP point must be square, got shape {Z.shape}")
        if np.linalg.norm(Z - Z.conj().T) > MEMBERSHIP_TOL or np.linalg.norm(Z @ Z - Z) > MEMBERSHIP_TOL:
            raise InvalidInput("matrix is not a Hermitian idempotent")
        if abs(np.trace(Z) - 1.0) > TRACE_TOL:
            raise InvalidInput("CP point must have unit trace")
        object.__setattr__(self, "matrix", 0.5 * (Z + Z.conj().T))

    @property
    def k(self):
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, z):
        """Embed a complex unit vector as zz*"""
        z = require_unit(np.asarray(z, dtype=complex), name="z")
        return cls(np.outer(z, z.conj()))

    @property
    def vector(self) -> np.ndarray:
        """A unit representative z (phase-normalized leading eigenvector)"""
        return herm_eig(self.matrix).eigenvectors[:, 0]

    def to_ambient(self) -> AmbientMatrix:
        return AmbientMatrix(self.matrix, Structure.HERMITIAN)


ManifoldPoint = Union[StiefelPoint, GrassmannPoint, CPPoint]


def project_stiefel(A) -> StiefelPoint:
    """
    Nearest Stiefel point to a real k x r matrix (polar orthogonal factor)

    Uniqueness only needs the smallest singular value to be positive; distinct
    singular values are not required.

    Args:
        A: real k x r matrix or AmbientMatrix

    Returns:
        StiefelPoint: sum_j s_j t_j^T
    """
    decomposition = svd(_as_array(A))
    if decomposition.singular_values[-1] <= SINGULAR_FLOOR:
        raise DegenerateProjection(
            f"smallest singular value {decomposition.singular_values[-1]:.3e} makes the projection non-unique"
        )
    return StiefelPoint(decomposition.left_vectors @ decomposition.right_vectors.T)


def project_grassmann(A, r) -> GrassmannPoint:
    """
    Nearest rank-r projector to a real symmetric matrix

    Ties inside the leading r eigenvalues are fine; only the r / r+1 gap
    decides uniqueness.

    Args:
        A: real symmetric k x k matrix or AmbientMatrix
        r (int): subspace dimension, 1 <= r <= k

    Returns:
        GrassmannPoint: sum_{j<=r} q_j q_j^T
    """
    decomposition = sym_eig(_as_array(A))
    k = decomposition.eigenvalues.size
    if not 1 <= r <= k:
        raise InvalidInput(f"rank must lie in [1, {k}], got {r}")
    if r < k:
        gap = decomposition.eigenvalues[r - 1] - decomposition.eigenvalues[r]
        if gap <= EIGENGAP_FLOOR:
            raise DegenerateProjection(f"eigengap {gap:.3e} between positions {r} and {r + 1} is too small")
    Q = decomposition.eigenvectors[:, :r]
    return GrassmannPoint(Q @ Q.T, r)


def project_cp(A) -> CPPoint:
    """
    Nearest point of CP^{k-1} to a complex Hermitian matrix

    Args:
        A: complex Hermitian k x k matrix or AmbientMatrix

    Returns:
        CPPoint: u_1 u_1^* for the leading eigenvector u_1
    """
    decomposition = herm_eig(_as_array(A))
    lam = decomposition.eigenvalues
    if lam.size > 1 and lam[0] - lam[1] <= EIGENGAP_FLOOR:
        raise DegenerateProjection(f"leading eigengap {lam[0] - lam[1]:.3e} is too small")
    u = decomposition.eigenvectors[:, 0]
    return CPPoint(np.outer(u, u.conj()))


def project(A, kind: ManifoldKind, rank: Optional[int] = None) -> ManifoldPoint:
    """Dispatch to the projection for a manifold kind"""
    kind = ManifoldKind(kind)
    if kind is ManifoldKind.STIEFEL:
        return project_stiefel(A)
    if kind is ManifoldKind.GRASSMANN:
        return project_grassmann(A, rank)
    return project_cp(A)


def _check_points(data: Sequence[ManifoldPoint]):
    if len(data) == 0:
        raise InvalidInput("data must contain at least one point")
    first = data[0]
    for i, point in enumerate(data):
        if type(point) is not type(first) or point.matrix.shape != first.matrix.shape:
            raise InvalidInput(f"datum {i} does not match the type or shape of datum 0")
        if isinstance(point, GrassmannPoint) and point.rank != first.rank:
            raise InvalidInput(f"datum {i} has rank {point.rank}, expected {first.rank}")
    return first


def pfm(
    data: Sequence[ManifoldPoint],
    tol=None,
    max_iter=None,
    weights=None,
    require_convergence=False,
) -> Tuple[ManifoldPoint, MedianResult]:
    """
    Projected Frobenius median of manifold-valued data

    Args:
        data (list): points of a single manifold type and shape
        tol (float): ambient solver tolerance
        max_iter (int): ambient solver iteration cap
        weights: optional probability weights on the data
        require_convergence (bool): raise NotConverged instead of returning a flagged result

    Returns:
        tuple: (projected median, MedianResult holding the ambient median)
    """
    first = _check_points(data)
    result = frobenius_median([p.to_ambient() for p in data], tol=tol, max_iter=max_iter, weights=weights)
    if not result.converged and require_convergence:
        raise NotConverged(f"ambient median stopped after {result.iterations} iterations (gap {result.gap:.3e})")
    rank = first.rank if isinstance(first, GrassmannPoint) else None
    point = project(result.median, first.kind, rank)
    if result.nonunique:
        logger.warning("ambient median of %d points is not unique (colinear data)", len(data))
    return point, result


def extrinsic_distance(a, b) -> float:
    """Frobenius chordal distance between two points of the same manifold"""
    A, B = _as_array(a), _as_array(b)
    if type(a) is not type(b) or A.shape != B.shape:
        raise InvalidInput(f"cannot compare {type(a).__name__}{A.shape} with {type(b).__name__}{B.shape}")
    return float(np.linalg.norm(A - B))


def angular_error(z_hat, z0) -> float:
    """
    Angle arccos(|z0^* z_hat|) between two points of the complex sphere

    Returns:
        float: angle in [0, pi/2], invariant to the phase of either input
    """
    z_hat = require_unit(np.asarray(z_hat, dtype=complex), name="z_hat")
    z0 = require_unit(np.asarray(z0, dtype=complex), name="z0")
    if z_hat.shape != z0.shape:
        raise InvalidInput("vectors must have the same length")
    return float(np.arccos(np.clip(abs(np.vdot(z0, z_hat)), 0.0, 1.0)))
