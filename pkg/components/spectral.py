"""
Spectral decompositions with fixed sign and phase conventions
Thin wrappers over scipy.linalg so every projection and covariance formula
sees the same, deterministic eigenvector orientation.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from utils.errors import InvalidInput
from utils.validators import require_finite, require_hermitian, require_symmetric

# Spectra with a consecutive gap below this are flagged as near-degenerate.
GAP_FLAG_TOL = 1e-8


@dataclass(frozen=True)
class Svd:
    """Thin SVD A = sum_j rho_j s_j t_j^T with nonincreasing rho"""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    near_degenerate: bool

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class SymEig:
    """Real symmetric eigendecomposition, eigenvalues nonincreasing"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    near_degenerate: bool

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True)
class HermEig:
    """Complex Hermitian eigendecomposition, eigenvalues nonincreasing"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    near_degenerate: bool

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def _sign_fix(vectors):
    """Flip columns so each column's largest-magnitude entry is nonnegative"""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs, signs


def _phase_fix(vectors):
    """Rotate columns so each column's largest-magnitude entry is real nonnegative"""
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    magnitudes = np.abs(pivots)
    phases = np.ones_like(pivots)
    nonzero = magnitudes > 0
    phases[nonzero] = pivots[nonzero].conj() / magnitudes[nonzero]
    fixed = vectors * phases
    fixed[idx, np.arange(vectors.shape[1])] = magnitudes
    return fixed


def _has_small_gap(values):
    if values.size < 2:
        return False
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.min(np.abs(np.diff(values))) < GAP_FLAG_TOL * scale)


def svd(A) -> Svd:
    """
    Thin SVD of a real k x r matrix (k >= r)

    Args:
        A: real k x r matrix

    Returns:
        Svd: singular values, k x r left vectors, r x r right vectors
    """
    values = require_finite(A, "matrix")
    if values.ndim != 2 or np.iscomplexobj(values):
        raise InvalidInput("svd expects a real 2-d matrix")
    k, r = values.shape
    if not k >= r >= 1:
        raise InvalidInput(f"svd expects k >= r >= 1, got {values.shape}")
    U, rho, Vt = linalg.svd(values.astype(float), full_matrices=False, lapack_driver="gesdd")
    U, signs = _sign_fix(U)
    V = Vt.T * signs
    return Svd(rho, U, V, _has_small_gap(rho))


def sym_eig(A) -> SymEig:
    """
    Eigendecomposition of a real symmetric matrix

    Args:
        A: real symmetric k x k matrix (symmetrized before decomposition)

    Returns:
        SymEig: eigenvalues in nonincreasing order, matching eigenvector columns
    """
    values = require_symmetric(A, name="matrix")
    lam, Q = linalg.eigh(values)
    lam, Q = lam[::-1], Q[:, ::-1]
    Q, _ = _sign_fix(Q)
    return SymEig(lam, Q, _has_small_gap(lam))


def herm_eig(A) -> HermEig:
    """
    Eigendecomposition of a complex Hermitian matrix

    Args:
        A: complex Hermitian k x k matrix (Hermitized before decomposition)

    Returns:
        HermEig: eigenvalues nonincreasing, unit eigenvectors phase-normalized
    """
    values = require_hermitian(A, name="matrix")
    lam, U = linalg.eigh(values)
    lam, U = lam[::-1], U[:, ::-1]
    return HermEig(lam, _phase_fix(U), _has_small_gap(lam))


def orthonormal_completion(columns) -> np.ndarray:
    """
    Extend k x r orthonormal columns to a full k x k orthonormal basis

    The first r columns are returned unchanged; the remaining k - r span the
    orthogonal complement with the svd sign convention applied.
    """
    columns = np.asarray(columns)
    k, r = columns.shape
    if r == k:
        return columns.copy()
    complement = linalg.null_space(columns.conj().T)
    if np.iscomplexobj(complement):
        complement = _phase_fix(complement)
    else:
        complement, _ = _sign_fix(complement)
    return np.hstack([columns, complement])


def canonical_signs(vectors) -> np.ndarray:
    """Sign-flip real columns so each largest-magnitude entry is nonnegative"""
    fixed, _ = _sign_fix(np.asarray(vectors, dtype=float))
    return fixed
