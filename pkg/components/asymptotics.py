"""
Influence functions and CLT covariances of projected Frobenius medians
Plug-in versions of the sandwich H^{-1} J H^{-1} evaluated at the ambient
median, pushed through the derivative of each projection and expressed in
orthonormal tangent coordinates at the projected median.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg, stats

from components.manifolds import ManifoldKind, pfm
from components.median import AmbientMatrix, MedianResult
from components.spectral import herm_eig, orthonormal_completion, svd, sym_eig
from components.vectorize import SQRT2, duplication_matrices
from utils.errors import AnchorResidual, DegenerateSpectrum, InvalidInput, SingularH

logger = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-12
GAP_FLOOR = 1e-10
COND_WARN = 1e12
COND_FAIL = 1e15
PSD_WARN = 1e-10
BASIS_TOL = 1e-10


def _ambient(x) -> AmbientMatrix:
    if isinstance(x, AmbientMatrix):
        return x
    if hasattr(x, "to_ambient"):
        return x.to_ambient()
    raise InvalidInput(f"cannot place {type(x).__name__} in an ambient space")


def _vec(M) -> np.ndarray:
    return np.asarray(M).reshape(-1, order="F")


@dataclass
class HJPair:
    """Plug-in H and J matrices in the structure's vectorized coordinates"""

    H: np.ndarray
    J: np.ndarray
    structure: object
    shape: tuple

    @cached_property
    def H_inv(self) -> np.ndarray:
        eigenvalues = linalg.eigvalsh(self.H)
        largest = float(np.max(np.abs(eigenvalues)))
        smallest = float(np.min(eigenvalues))
        if largest == 0.0 or smallest <= 0.0 or largest / smallest > COND_FAIL:
            raise SingularH(f"H is singular (eigenvalues in [{smallest:.3e}, {largest:.3e}])")
        condition = largest / smallest
        if condition > COND_WARN:
            logger.warning("H condition number %.3e; using pseudo-inverse", condition)
        return linalg.pinvh(self.H)

    @property
    def condition(self) -> float:
        eigenvalues = linalg.eigvalsh(self.H)
        smallest = float(np.min(eigenvalues))
        return float(np.max(np.abs(eigenvalues)) / smallest) if smallest > 0 else np.inf

    @cached_property
    def V(self) -> np.ndarray:
        V = self.H_inv @ self.J @ self.H_inv
        return 0.5 * (V + V.T)


@dataclass
class TangentBasis:
    """
    Orthonormal tangent directions at a manifold point, in vec coordinates

    For CP the columns are the complex vec(E_b) and partner holds vec(F_b),
    the second real direction of each complex coordinate.
    """

    kind: ManifoldKind
    columns: np.ndarray
    labels: List[tuple]
    partner: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.columns.shape[1]

    def real_columns(self) -> np.ndarray:
        """Real orthonormal frame; for CP the stacked (Re, Im) of [E, F]"""
        if self.partner is None:
            return self.columns
        both = np.hstack([self.columns, self.partner])
        return np.vstack([both.real, both.imag])


@dataclass
class CovarianceEstimate:
    """Tangent-coordinate covariance; real_matrix is the real 2(k-1) form for CP"""

    C: np.ndarray
    spectrum_used: np.ndarray
    rank_flag: bool
    real_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.real_matrix is None:
            self.real_matrix = self.C


@dataclass
class PFMState:
    """Everything the asymptotic formulas need about one fitted PFM"""

    kind: ManifoldKind
    point: object
    ambient: AmbientMatrix
    median: MedianResult
    hj: HJPair
    spectral: object
    rank: int
    n: int
    vectors: np.ndarray = field(repr=False, default=None)


def empirical_hj(data: Sequence, A0, weights=None) -> HJPair:
    """
    Sample (or weighted) H and J at a candidate median A0

    H = mean (1/|r|)(I - v v^T/|r|^2), J = mean v v^T/|r|^2 with v the
    vectorized residual X_i - A0.

    Args:
        data (list): AmbientMatrix or manifold points
        A0: AmbientMatrix (typically the ambient median)
        weights: optional probability weights

    Returns:
        HJPair: real symmetric p x p matrices
    """
    A0 = _ambient(A0)
    items = [_ambient(x) for x in data]
    if not items:
        raise InvalidInput("data must contain at least one point")
    points = np.vstack([item.to_vector() for item in items])
    n, p = points.shape
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)

    residuals = points - A0.to_vector()
    norms = np.linalg.norm(residuals, axis=1)
    tiny = np.flatnonzero(norms <= RESIDUAL_FLOOR)
    if tiny.size:
        raise AnchorResidual(
            f"datum {tiny[0]} coincides with the median (residual {norms[tiny[0]]:.3e}); drop or jitter it",
            int(tiny[0]),
        )
    units = residuals / norms[:, None]
    scaled = w / norms
    H = scaled.sum() * np.eye(p) - (units * scaled[:, None]).T @ units
    J = (units * w[:, None]).T @ units
    return HJPair(0.5 * (H + H.T), 0.5 * (J + J.T), A0.structure, A0.shape)


def influence_ambient(z, A0, hj: HJPair) -> AmbientMatrix:
    """
    Influence function of the ambient median: H^{-1} vec(z - A0)/|z - A0|

    Args:
        z: contaminating point (manifold point or AmbientMatrix)
        A0: ambient median
        hj (HJPair): H and J at A0

    Returns:
        AmbientMatrix: same structure as A0
    """
    A0 = _ambient(A0)
    residual = _ambient(z).to_vector() - A0.to_vector()
    norm = float(np.linalg.norm(residual))
    if norm <= RESIDUAL_FLOOR:
        raise AnchorResidual("evaluation point coincides with the median")
    return AmbientMatrix.from_vector(hj.H_inv @ (residual / norm), A0.structure, A0.shape)


def _spectral_for(kind, A0: AmbientMatrix):
    if kind is ManifoldKind.STIEFEL:
        return svd(A0.values)
    if kind is ManifoldKind.GRASSMANN:
        return sym_eig(A0.values)
    return herm_eig(A0.values)


def _check_gaps(kind, spectral, rank):
    if kind is ManifoldKind.STIEFEL:
        rho = spectral.singular_values
        if rho[-1] <= GAP_FLOOR:
            raise DegenerateSpectrum(f"smallest singular value {rho[-1]:.3e} is too small")
    elif kind is ManifoldKind.GRASSMANN:
        lam = spectral.eigenvalues
        if rank < lam.size and lam[rank - 1] - lam[rank] <= GAP_FLOOR:
            raise DegenerateSpectrum(f"eigengap {lam[rank - 1] - lam[rank]:.3e} at position {rank}")
    else:
        lam = spectral.eigenvalues
        if lam[0] - lam[1] <= GAP_FLOOR:
            raise DegenerateSpectrum(f"leading eigengap {lam[0] - lam[1]:.3e}")


def _full_vectors(kind, spectral):
    if kind is ManifoldKind.STIEFEL:
        return orthonormal_completion(spectral.left_vectors)
    return spectral.eigenvectors


def build_state(data: Sequence, weights=None, tol=None, max_iter=None) -> PFMState:
    """
    Fit the PFM and collect the plug-in quantities for the asymptotic formulas

    Args:
        data (list): StiefelPoint, GrassmannPoint or CPPoint observations
        weights: optional probability weights

    Returns:
        PFMState: projected median, ambient median, H/J and spectral data
    """
    point, result = pfm(data, tol=tol, max_iter=max_iter, weights=weights)
    kind = point.kind
    A0 = result.median
    spectral = _spectral_for(kind, A0)
    if kind is ManifoldKind.STIEFEL:
        rank = A0.values.shape[1]
    elif kind is ManifoldKind.GRASSMANN:
        rank = point.rank
    else:
        rank = 1
    _check_gaps(kind, spectral, rank)
    hj = empirical_hj(data, A0, weights)
    return PFMState(kind, point, A0, result, hj, spectral, rank, len(data), _full_vectors(kind, spectral))


def manifold_derivative(state: PFMState, dA) -> np.ndarray:
    """
    Derivative of the projection at the ambient median applied to dA

    Args:
        state (PFMState): fitted state
        dA: ambient perturbation (matrix or AmbientMatrix)

    Returns:
        np.ndarray: tangent matrix at the projected median
    """
    dA = dA.values if isinstance(dA, AmbientMatrix) else np.asarray(dA)
    r = state.rank
    if state.kind is ManifoldKind.STIEFEL:
        S, T = state.vectors, state.spectral.right_vectors
        rho = state.spectral.singular_values
        M = S.T @ dA @ T
        omega = np.zeros_like(M)
        omega[:r] = (M[:r] - M[:r].T) / (rho[:, None] + rho[None, :])
        omega[r:] = M[r:] / rho[None, :]
        return S @ omega @ T.T
    if state.kind is ManifoldKind.GRASSMANN:
        Q, lam = state.vectors, state.spectral.eigenvalues
        M = Q.T @ dA @ Q
        omega = np.zeros_like(M)
        omega[:r, r:] = M[:r, r:] / (lam[:r, None] - lam[None, r:])
        omega[r:, :r] = omega[:r, r:].T
        return Q @ omega @ Q.T
    U, lam = state.vectors, state.spectral.eigenvalues
    u1 = U[:, 0]
    coefficients = (U[:, 1:].conj().T @ dA @ u1) / (lam[0] - lam[1:])
    half = np.outer(U[:, 1:] @ coefficients, u1.conj())
    return half + half.conj().T


def influence_manifold(z, state: PFMState) -> np.ndarray:
    """
    Influence function of the projected median at a contaminating point z

    Returns:
        np.ndarray: tangent matrix (k x r, symmetric k x k, or Hermitian k x k)
    """
    _check_gaps(state.kind, state.spectral, state.rank)
    return manifold_derivative(state, influence_ambient(z, state.ambient, state.hj))


def _check_orthonormal(real_columns):
    gram = real_columns.T @ real_columns
    if np.linalg.norm(gram - np.eye(gram.shape[0])) > BASIS_TOL:
        raise DegenerateSpectrum("tangent basis is not orthonormal")


def tangent_basis(kind, spectral, rank=None) -> TangentBasis:
    """
    Orthonormal tangent basis at the projection of the decomposed matrix

    Args:
        kind (ManifoldKind): manifold
        spectral: Svd (Stiefel), SymEig (Grassmann) or HermEig (CP)
        rank (int): Grassmann subspace dimension

    Returns:
        TangentBasis: columns in vec coordinates, 0-based index labels
    """
    kind = ManifoldKind(kind)
    columns, labels, partner = [], [], None
    if kind is ManifoldKind.STIEFEL:
        S = orthonormal_completion(spectral.left_vectors)
        T = spectral.right_vectors
        k, r = S.shape[0], T.shape[0]
        for b in range(r):
            for a in range(b):
                columns.append(_vec(np.outer(S[:, a], T[:, b]) - np.outer(S[:, b], T[:, a])) / SQRT2)
                labels.append((1, a, b))
        for a in range(r):
            for j in range(r, k):
                columns.append(_vec(np.outer(S[:, j], T[:, a])))
                labels.append((2, a, j))
        basis = np.column_stack(columns) if columns else np.zeros((k * r, 0))
    elif kind is ManifoldKind.GRASSMANN:
        Q = spectral.eigenvectors
        k = Q.shape[0]
        for a in range(rank):
            for b in range(rank, k):
                columns.append(_vec(np.outer(Q[:, a], Q[:, b]) + np.outer(Q[:, b], Q[:, a])) / SQRT2)
                labels.append((a, b))
        basis = np.column_stack(columns) if columns else np.zeros((k * k, 0))
    else:
        U = spectral.eigenvectors
        u1 = U[:, 0]
        partners = []
        for b in range(1, U.shape[0]):
            ub = U[:, b]
            cross = np.outer(ub, u1.conj())
            columns.append(_vec(cross + cross.conj().T) / SQRT2)
            partners.append(_vec(1j * (cross - cross.conj().T)) / SQRT2)
            labels.append((b,))
        basis = np.column_stack(columns)
        partner = np.column_stack(partners)
    result = TangentBasis(kind, basis, labels, partner)
    _check_orthonormal(result.real_columns())
    return result


def tangent_coordinates(basis: TangentBasis, delta) -> np.ndarray:
    """
    Coordinates of a (near-)tangent matrix difference in the basis

    For CP the result is the real vector (Re y, Im y) with
    y_b = sqrt(2) u_b^* delta u_1.
    """
    v = _vec(np.asarray(delta))
    if basis.partner is None:
        return basis.columns.T @ v.real
    return basis.real_columns().T @ np.concatenate([v.real, v.imag])


def _psd_floor(C, label):
    C = 0.5 * (C + C.conj().T)
    if C.size == 0:
        return C, False
    eigenvalues, vectors = np.linalg.eigh(C)
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues.min() < -PSD_WARN * scale:
        logger.warning("%s covariance had eigenvalue %.3e; floored at 0", label, eigenvalues.min())
    rank_flag = bool(eigenvalues.min() <= 1e-12 * scale)
    if eigenvalues.min() < 0:
        eigenvalues = np.clip(eigenvalues, 0.0, None)
        C = (vectors * eigenvalues) @ vectors.conj().T
    return C, rank_flag


def clt_covariance(kind, hj: HJPair, basis: TangentBasis, spectral, rank=None) -> CovarianceEstimate:
    """
    Plug-in asymptotic covariance of sqrt(n) times the tangent coordinates

    Args:
        kind (ManifoldKind): manifold
        hj (HJPair): H and J at the ambient median
        basis (TangentBasis): basis at the projected median
        spectral: decomposition of the ambient median
        rank (int): Grassmann subspace dimension

    Returns:
        CovarianceEstimate: PSD-floored covariance
    """
    kind = ManifoldKind(kind)
    V = hj.V
    if kind is ManifoldKind.STIEFEL:
        rho = spectral.singular_values
        # singular values beyond r are zero in the denominators
        padded = np.concatenate([rho, np.zeros(basis.columns.shape[0] // rho.size - rho.size)])
        factors = np.array([2.0 ** (2 - alpha) / (padded[a] + padded[b]) for alpha, a, b in basis.labels])
        C = np.outer(factors, factors) * (basis.columns.T @ V @ basis.columns)
        C, flag = _psd_floor(C, "Stiefel")
        return CovarianceEstimate(C, rho, flag)

    k = int(round(np.sqrt(basis.columns.shape[0])))
    D, Dt, G = duplication_matrices(k)
    lam = spectral.eigenvalues
    if kind is ManifoldKind.GRASSMANN:
        to_vec = D @ np.diag(1.0 / np.diag(G))
        projected = basis.columns.T @ to_vec
        factors = np.array([1.0 / (lam[a] - lam[b]) for a, b in basis.labels])
        C = np.outer(factors, factors) * (projected @ V @ projected.T)
        C, flag = _psd_floor(C, "Grassmann")
        return CovarianceEstimate(C, lam, flag)

    U = spectral.eigenvectors
    u1 = U[:, 0]
    to_parts = linalg.block_diag(D @ np.diag(1.0 / np.diag(G)), Dt / SQRT2)
    real_rows, imag_rows = [], []
    for b in range(1, k):
        h = _vec(np.outer(U[:, b], u1.conj()))
        scale = SQRT2 / (lam[0] - lam[b])
        real_rows.append(scale * np.concatenate([h.real, h.imag]))
        imag_rows.append(scale * np.concatenate([-h.imag, h.real]))
    L = np.vstack(real_rows + imag_rows) @ to_parts
    C_real, flag = _psd_floor(L @ V @ L.T, "CP")
    m = k - 1
    RR, RI, IR, II = C_real[:m, :m], C_real[:m, m:], C_real[m:, :m], C_real[m:, m:]
    C = (RR + II) + 1j * (IR - RI)
    return CovarianceEstimate(0.5 * (C + C.conj().T), lam, flag, C_real)


@dataclass
class TangentReport:
    """Tangent basis, covariance and (optionally) coordinates at a fitted PFM"""

    state: PFMState
    basis: TangentBasis
    covariance: CovarianceEstimate
    coordinates: Optional[np.ndarray] = None

    @property
    def point(self):
        return self.state.point

    @property
    def complex_coordinates(self) -> Optional[np.ndarray]:
        """y_b = Re + i Im for CP reports"""
        if self.coordinates is None or self.basis.partner is None:
            return None
        m = self.basis.dimension
        return self.coordinates[:m] + 1j * self.coordinates[m:]


def tangent_report(data: Sequence, reference=None, weights=None, tol=None, max_iter=None) -> TangentReport:
    """
    Fit the PFM and assemble basis, plug-in covariance and coordinates

    Args:
        data (list): manifold points
        reference: optional manifold point whose coordinates relative to the
            projected median are reported

    Returns:
        TangentReport
    """
    state = build_state(data, weights=weights, tol=tol, max_iter=max_iter)
    basis = tangent_basis(state.kind, state.spectral, state.rank)
    covariance = clt_covariance(state.kind, state.hj, basis, state.spectral, state.rank)
    coordinates = None
    if reference is not None:
        coordinates = tangent_coordinates(basis, reference.matrix - state.point.matrix)
    return TangentReport(state, basis, covariance, coordinates)


@dataclass(frozen=True)
class ConfidenceCheck:
    statistic: float
    threshold: float
    dof: int
    inside: bool


def confidence_statistic(report: TangentReport, n=None, level=0.95) -> ConfidenceCheck:
    """
    Wald-type statistic n y^T C^{-1} y against its chi-square quantile

    Args:
        report (TangentReport): report built with a reference point
        n (int): sample size (defaults to the fitted sample size)
        level (float): confidence level

    Returns:
        ConfidenceCheck: statistic, threshold, degrees of freedom, coverage flag
    """
    if report.coordinates is None:
        raise InvalidInput("report has no reference coordinates")
    n = report.state.n if n is None else n
    y = report.coordinates
    C = report.covariance.real_matrix
    statistic = float(n * y @ linalg.pinvh(C) @ y)
    dof = y.size
    threshold = float(stats.chi2.ppf(level, dof))
    return ConfidenceCheck(statistic, threshold, dof, statistic <= threshold)


def influence_norms(state: PFMState, points: Sequence) -> np.ndarray:
    """Frobenius norms of the manifold influence function over evaluation points"""
    return np.array([np.linalg.norm(influence_manifold(z, state)) for z in points])
