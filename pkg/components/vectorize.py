"""
Norm-preserving vectorization operators
Map general, symmetric, skew-symmetric and Hermitian matrices to real
Euclidean vectors so Frobenius medians reduce to spatial medians.

Lower-triangle orderings are column-major: for a 3 x 3 matrix the order is
(a11, a21, a31, a22, a32, a33).
"""

from functools import lru_cache

import numpy as np

from utils.errors import InvalidInput
from utils.validators import require_finite, require_hermitian, require_skew, require_symmetric

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=64)
def _lower_indices(k, strict=False):
    # triu_indices walks rows first, which read transposed is column-major lower
    cols, rows = np.triu_indices(k, 1 if strict else 0)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def _side_from_length(length, strict=False):
    """Recover k from k(k+1)/2 (or k(k-1)/2 when strict)"""
    disc = 1 + 8 * length
    root = int(round(np.sqrt(disc)))
    if root * root != disc:
        raise InvalidInput(f"length {length} is not a triangular number")
    return (root + 1) // 2 if strict else (root - 1) // 2


def vec(X) -> np.ndarray:
    """
    Column-stacking vectorization

    Args:
        X: real k x r matrix

    Returns:
        np.ndarray: length k*r vector with |vec(X)| = |X|_F
    """
    values = require_finite(X, "matrix")
    if values.ndim != 2:
        raise InvalidInput("vec expects a 2-d matrix")
    return values.reshape(-1, order="F").copy()


def unvec(v, k, r) -> np.ndarray:
    """Inverse of vec for a k x r target"""
    values = np.asarray(v)
    if values.ndim != 1 or values.size != k * r:
        raise InvalidInput(f"vector of length {values.size} cannot fill a {k} x {r} matrix")
    return values.reshape((k, r), order="F").copy()


def vech_sqrt2(A) -> np.ndarray:
    """
    Half-vectorization with off-diagonal entries scaled by sqrt(2)

    Args:
        A: real symmetric k x k matrix

    Returns:
        np.ndarray: length k(k+1)/2 vector, isometric in the Frobenius norm
    """
    values = require_symmetric(A, name="matrix")
    rows, cols = _lower_indices(values.shape[0])
    out = values[rows, cols].astype(float)
    out[rows != cols] *= SQRT2
    return out


def unvech_sqrt2(v) -> np.ndarray:
    """Inverse of vech_sqrt2"""
    values = np.asarray(v, dtype=float)
    if values.ndim != 1:
        raise InvalidInput("unvech_sqrt2 expects a 1-d vector")
    k = _side_from_length(values.size)
    rows, cols = _lower_indices(k)
    entries = values.copy()
    entries[rows != cols] /= SQRT2
    A = np.zeros((k, k))
    A[rows, cols] = entries
    A[cols, rows] = entries
    return A


def vecl(V) -> np.ndarray:
    """
    Strict lower triangle of a skew-symmetric matrix, column-major

    Args:
        V: real skew-symmetric k x k matrix

    Returns:
        np.ndarray: length k(k-1)/2 vector
    """
    values = require_skew(V, name="matrix")
    rows, cols = _lower_indices(values.shape[0], strict=True)
    return values[rows, cols].astype(float)


def unvecl(v, k=None) -> np.ndarray:
    """Inverse of vecl, rebuilding the skew-symmetric matrix"""
    values = np.asarray(v, dtype=float)
    if values.ndim != 1:
        raise InvalidInput("unvecl expects a 1-d vector")
    side = _side_from_length(values.size, strict=True) if k is None else k
    if side * (side - 1) // 2 != values.size:
        raise InvalidInput(f"vector of length {values.size} does not fit a {side} x {side} skew matrix")
    rows, cols = _lower_indices(side, strict=True)
    V = np.zeros((side, side))
    V[rows, cols] = values
    V[cols, rows] = -values
    return V


def vec_hermitian(A) -> np.ndarray:
    """
    Real isometric vectorization of a Hermitian matrix

    (vech_sqrt2(Re A), sqrt(2) * vecl(Im A)); length k^2.
    """
    values = require_hermitian(A, name="matrix")
    return np.concatenate([vech_sqrt2(values.real), SQRT2 * vecl(values.imag)])


def unvec_hermitian(v) -> np.ndarray:
    """Inverse of vec_hermitian; the imaginary part gets a zero diagonal"""
    values = np.asarray(v, dtype=float)
    if values.ndim != 1:
        raise InvalidInput("unvec_hermitian expects a 1-d vector")
    k = int(round(np.sqrt(values.size)))
    if k * k != values.size or k < 1:
        raise InvalidInput(f"length {values.size} is not a perfect square")
    half = k * (k + 1) // 2
    real = unvech_sqrt2(values[:half])
    imag = unvecl(values[half:] / SQRT2, k)
    return real + 1j * imag


def diagonal_positions(k) -> np.ndarray:
    """0-based positions of diagonal entries inside the vech ordering"""
    j = np.arange(k)
    return j * k - j * (j - 1) // 2


def duplication_matrices(k):
    """
    Duplication matrices and the sqrt(2) weighting of the half-vectorization

    Args:
        k (int): matrix side, k >= 2

    Returns:
        tuple: (D_k, Dtilde_k, G_k) with D_k vech(A) = vec(A) for symmetric A,
        Dtilde_k vecl(V) = vec(V) for skew V, and G_k diagonal with 1 on
        diagonal-entry positions and sqrt(2) elsewhere, so vech_sqrt2 = G_k vech.
    """
    if k < 2:
        raise InvalidInput("duplication matrices need k >= 2")
    rows, cols = _lower_indices(k)
    D = np.zeros((k * k, rows.size))
    t = np.arange(rows.size)
    D[rows + cols * k, t] = 1.0
    D[cols + rows * k, t] = 1.0

    srows, scols = _lower_indices(k, strict=True)
    Dt = np.zeros((k * k, srows.size))
    s = np.arange(srows.size)
    Dt[srows + scols * k, s] = 1.0
    Dt[scols + srows * k, s] = -1.0

    g = np.full(rows.size, SQRT2)
    g[diagonal_positions(k)] = 1.0
    return D, Dt, np.diag(g)
