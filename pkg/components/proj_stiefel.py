"""
Projective Stiefel manifold PV_{k,r}
Orthogonal axial frames, i.e. Stiefel points modulo independent column sign
flips. The median is computed on the sign-invariant embedding
(x_1 x_1^T, ..., x_r x_r^T), projected to a rank-1 tuple and then to a frame.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from components.manifolds import StiefelPoint, project_stiefel
from components.median import AmbientMatrix, MedianResult, Structure, tuple_frobenius_median
from components.spectral import canonical_signs, svd, sym_eig
from utils.errors import DegenerateFrame, DegenerateProjection, InvalidInput
from utils.validators import require_symmetric

logger = logging.getLogger(__name__)

EIGENGAP_FLOOR = 1e-10
INDEPENDENCE_FLOOR = 1e-8
COSET_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class ProjStiefelPoint:
    """
    Axial frame [±x_1, ..., ±x_r]

    representative is one member of the 2^r sign coset; canonicalized marks
    the member whose columns have a nonnegative largest-magnitude entry.
    labels optionally names the axes (e.g. T, B, P).
    """

    representative: StiefelPoint
    canonicalized: bool = False
    labels: Tuple[str, ...] = ()

    kind = "proj-stiefel"

    @classmethod
    def from_matrix(cls, X, canonical=True, labels=()):
        point = StiefelPoint(np.asarray(X, dtype=float))
        if canonical:
            return canonicalize(point, labels)
        return cls(point, False, tuple(labels))

    @property
    def matrix(self) -> np.ndarray:
        return self.representative.matrix

    @property
    def k(self):
        return self.representative.k

    @property
    def r(self):
        return self.representative.r


@dataclass(frozen=True)
class AxialTuple:
    """r symmetric k x k matrices (B_1, ..., B_r), stored as an r x k x k array"""

    components: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.components, dtype=float)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise InvalidInput(f"axial tuple must be r x k x k, got shape {B.shape}")
        object.__setattr__(self, "components", np.stack([require_symmetric(b, name="tuple component") for b in B]))

    def to_ambient(self) -> AmbientMatrix:
        return AmbientMatrix(self.components, Structure.SYMMETRIC_TUPLE)


def _as_frame_matrix(point) -> np.ndarray:
    if isinstance(point, (ProjStiefelPoint, StiefelPoint)):
        return point.matrix
    return np.asarray(point, dtype=float)


def canonicalize(point, labels=()) -> ProjStiefelPoint:
    """Pick the coset member whose columns have a nonnegative largest-magnitude entry"""
    X = canonical_signs(_as_frame_matrix(point))
    if not labels and isinstance(point, ProjStiefelPoint):
        labels = point.labels
    return ProjStiefelPoint(StiefelPoint(X), True, tuple(labels))


def embed_frame(X) -> AxialTuple:
    """
    Sign-invariant embedding (x_1 x_1^T, ..., x_r x_r^T)

    Args:
        X: ProjStiefelPoint, StiefelPoint or k x r matrix

    Returns:
        AxialTuple: rank-1 components, unchanged by any column sign flip
    """
    M = _as_frame_matrix(X)
    return AxialTuple(np.einsum("ij,kj->jik", M, M))


def leading_axes(B: AxialTuple) -> np.ndarray:
    """
    Leading eigenvectors q_11, ..., q_r1 of each tuple component

    Returns:
        np.ndarray: k x r matrix of linearly independent unit columns
    """
    leaders = []
    for j, component in enumerate(B.components):
        decomposition = sym_eig(component)
        lam = decomposition.eigenvalues
        if lam.size > 1 and lam[0] - lam[1] <= EIGENGAP_FLOOR:
            raise DegenerateProjection(f"component {j} has leading eigengap {lam[0] - lam[1]:.3e}")
        leaders.append(decomposition.eigenvectors[:, 0])
    Q = np.column_stack(leaders)
    smallest = np.linalg.svd(Q, compute_uv=False)[-1]
    if smallest <= INDEPENDENCE_FLOOR:
        raise DegenerateFrame(f"leading eigenvectors are dependent (smallest singular value {smallest:.3e})")
    return Q


def project_to_rank1_tuple(B: AxialTuple) -> AxialTuple:
    """Nearest tuple of rank-1 projectors (q_11 q_11^T, ..., q_r1 q_r1^T)"""
    return embed_frame(leading_axes(B))


def project_frame(Q, eps=None) -> StiefelPoint:
    """
    Project Q_eps = Q diag(eps) onto the Stiefel manifold

    The SVD of Q is computed once; the sign twist only touches the right
    vectors, t_j(eps) = diag(eps) t_j.

    Args:
        Q: real k x r matrix with independent columns
        eps: sign vector of length r (defaults to all ones)

    Returns:
        StiefelPoint: sum_j s_j t_j(eps)^T
    """
    Q = np.asarray(Q, dtype=float)
    decomposition = svd(Q)
    if decomposition.singular_values[-1] <= 1e-12:
        raise DegenerateProjection("Q is rank deficient")
    r = Q.shape[1]
    eps = np.ones(r) if eps is None else np.asarray(eps, dtype=float)
    if eps.shape != (r,) or not np.all(np.abs(eps) == 1.0):
        raise InvalidInput("eps must be a vector of +1 / -1 of length r")
    twisted = decomposition.right_vectors * eps[:, None]
    return StiefelPoint(decomposition.left_vectors @ twisted.T)


def frame_coset(Q, verify=False) -> List[StiefelPoint]:
    """
    All 2^r Stiefel projections of the sign-twisted Q_eps

    Args:
        Q: k x r leader matrix
        verify (bool): cross-check each member against a direct projection of Q diag(eps)

    Returns:
        list: StiefelPoints ordered by itertools.product((1, -1), repeat=r)
    """
    Q = np.asarray(Q, dtype=float)
    coset = []
    for signs in itertools.product((1.0, -1.0), repeat=Q.shape[1]):
        eps = np.array(signs)
        member = project_frame(Q, eps)
        if verify:
            direct = project_stiefel(Q * eps)
            drift = np.linalg.norm(direct.matrix - member.matrix)
            if drift > COSET_CHECK_TOL:
                logger.warning("sign-twisted projection differs from direct projection by %.3e for eps=%s", drift, signs)
        coset.append(member)
    return coset


def pfm_proj_stiefel(
    data: Sequence,
    tol=None,
    max_iter=None,
    weights=None,
) -> Tuple[ProjStiefelPoint, List[StiefelPoint], MedianResult]:
    """
    Projected Frobenius median of axial frames

    Args:
        data (list): ProjStiefelPoints (or k x r matrices) sharing (k, r)
        tol (float): ambient solver tolerance
        max_iter (int): ambient solver iteration cap
        weights: optional probability weights

    Returns:
        tuple: (canonical median frame, full coset of 2^r Stiefel points, MedianResult)
    """
    if len(data) == 0:
        raise InvalidInput("data must contain at least one frame")
    shapes = {_as_frame_matrix(x).shape for x in data}
    if len(shapes) != 1:
        raise InvalidInput(f"frames have mixed shapes {sorted(shapes)}")
    result = tuple_frobenius_median([embed_frame(x).to_ambient() for x in data], tol=tol, max_iter=max_iter, weights=weights)
    Q = leading_axes(AxialTuple(result.median.values))
    coset = frame_coset(Q, verify=True)
    labels = getattr(data[0], "labels", ())
    return canonicalize(coset[0], labels), coset, result


def frame_angular_errors(est, truth) -> np.ndarray:
    """
    Per-axis axial angles arccos(|m_j^T m_hat_j|)

    Returns:
        np.ndarray: r angles in [0, pi/2]
    """
    E, T = _as_frame_matrix(est), _as_frame_matrix(truth)
    if E.shape != T.shape:
        raise InvalidInput(f"frame shapes differ: {E.shape} vs {T.shape}")
    cosines = np.abs(np.sum(E * T, axis=0))
    return np.arccos(np.clip(cosines, 0.0, 1.0))
