"""
Comparison estimators
Intrinsic Frechet mean and median on complex projective space, the
median-of-means, Procrustes phase alignment and the frame mean that maximizes
the summed axial scatter.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import linalg

from components.proj_stiefel import ProjStiefelPoint, canonicalize
from components.samplers import as_rng
from components.spectral import herm_eig, sym_eig
from utils.config import get_settings
from utils.errors import AlignmentUndefined, InvalidInput
from utils.validators import require_unit

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 2000
ANCHOR_DISTANCE = 1e-12
ARMIJO_C = 1e-4
MAX_HALVINGS = 40


@dataclass
class BaselineResult:
    """Estimate with its objective value and solver diagnostics"""

    estimate: object
    objective: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list, repr=False)


def _as_unit_rows(data) -> np.ndarray:
    X = np.atleast_2d(np.asarray(data, dtype=complex))
    if X.shape[0] == 0:
        raise InvalidInput("data must contain at least one point")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise InvalidInput("data must be complex unit vectors")
    return X


def _distances(X, z):
    return np.arccos(np.clip(np.abs(X @ z.conj()), 0.0, 1.0))


def _log_map(X, z, d):
    """Phase-aligned log maps of the rows of X at z (horizontal to z and iz)"""
    c = X @ z.conj()
    phase = np.ones_like(c)
    nonzero = np.abs(c) > 0
    phase[nonzero] = c[nonzero].conj() / np.abs(c[nonzero])
    aligned = X * phase[:, None]
    ratio = np.ones_like(d)
    positive = d > ANCHOR_DISTANCE
    ratio[positive] = d[positive] / np.sin(d[positive])
    return ratio[:, None] * (aligned - np.cos(d)[:, None] * z[None, :])


def _exp_map(z, v, t):
    norm = np.linalg.norm(v) * t
    if norm == 0:
        return z
    step = np.cos(norm) * z + np.sin(norm) * (v / np.linalg.norm(v))
    return step / np.linalg.norm(step)


def _real_inner(a, b):
    return float(np.real(np.vdot(a, b)))


def _default_init(X):
    return herm_eig(X.T @ X.conj()).eigenvectors[:, 0]


def _riemannian_descent(X, init, tol, max_iter, squared):
    settings = get_settings()
    power = 2 if squared else 1

    def objective_fn(z):
        return float(np.sum(_distances(X, z) ** power))

    z = _default_init(X) if init is None else require_unit(np.asarray(init, dtype=complex), name="init").copy()
    objective = objective_fn(z)
    history = [objective]
    converged = False

    for iteration in range(1, max_iter + 1):
        d = _distances(X, z)
        logs = _log_map(X, z, d)
        if squared:
            direction = logs.mean(axis=0)
            slope = -2.0 * X.shape[0] * _real_inner(direction, direction)
        else:
            free = d > ANCHOR_DISTANCE
            anchors = int((~free).sum())
            pull = (logs[free] / d[free, None]).sum(axis=0)
            if anchors and np.linalg.norm(pull) <= anchors:
                converged = True
                break
            direction = pull / (1.0 / d[free]).sum()
            slope = -_real_inner(pull, direction)

        if np.linalg.norm(direction) <= tol:
            converged = True
            break

        t = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = _exp_map(z, direction, t)
            new_objective = objective_fn(candidate)
            if new_objective <= objective + ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            converged = abs(objective - new_objective) <= tol * max(1.0, objective)
            break

        if settings.debug_descent:
            assert new_objective <= objective + 1e-12, f"ascent at iteration {iteration}"
        change = objective - new_objective
        z, objective = candidate, new_objective
        history.append(objective)
        if change <= tol * max(1.0, objective) and t * np.linalg.norm(direction) <= np.sqrt(tol):
            converged = True
            break
    else:
        iteration = max_iter

    if not converged:
        logger.warning("%s did not converge in %d iterations", "Frechet mean" if squared else "Frechet median", max_iter)
    return BaselineResult(z, objective, iteration, converged, history)


def frechet_mean_cp(data, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> BaselineResult:
    """
    Intrinsic Frechet mean minimizing sum_j arccos^2(|x_j^* z|)

    Riemannian gradient descent with Armijo backtracking; the update
    direction is the mean phase-aligned log map.

    Args:
        data: n x p complex unit vectors
        init: start point (defaults to the extrinsic mean direction)

    Returns:
        BaselineResult: unit vector estimate, objective, convergence flag
    """
    return _riemannian_descent(_as_unit_rows(data), init, tol, max_iter, squared=True)


def frechet_median_cp(data, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> BaselineResult:
    """
    Intrinsic Frechet (geometric) median minimizing sum_j arccos(|x_j^* z|)

    Manifold Weiszfeld iteration with weights 1/arccos(|x_j^* z|); points at
    the iterate are treated as anchors.
    """
    return _riemannian_descent(_as_unit_rows(data), init, tol, max_iter, squared=False)


def median_of_means_cp(data, n_subsets=7, seed=None, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> BaselineResult:
    """
    Median of the Frechet means of a random near-equal partition

    Args:
        data: n x p complex unit vectors
        n_subsets (int): number of groups; sizes differ by at most one
        seed: int or np.random.Generator for the partition

    Returns:
        BaselineResult: Frechet median of the group means
    """
    X = _as_unit_rows(data)
    if not 1 <= n_subsets <= X.shape[0]:
        raise InvalidInput(f"n_subsets must lie in [1, {X.shape[0]}]")
    rng = as_rng(0 if seed is None else seed)
    groups = np.array_split(rng.permutation(X.shape[0]), n_subsets)
    means = [frechet_mean_cp(X[g], init=init, tol=tol, max_iter=max_iter) for g in groups]
    if n_subsets == 1:
        return means[0]
    result = frechet_median_cp(np.vstack([m.estimate for m in means]), init=init, tol=tol, max_iter=max_iter)
    result.converged = result.converged and all(m.converged for m in means)
    return result


def procrustes_align(u, z0) -> np.ndarray:
    """
    Rotate u by a phase so that z0^* u is real and nonnegative

    Returns:
        np.ndarray: u e^{-i arg(z0^* u)}
    """
    u = np.asarray(u, dtype=complex)
    z0 = np.asarray(z0, dtype=complex)
    c = np.vdot(z0, u)
    if abs(c) <= 1e-12:
        raise AlignmentUndefined("u is orthogonal to z0; the rotation is undefined")
    return u * (c.conj() / abs(c))


def _frame_stack(data) -> np.ndarray:
    if len(data) == 0:
        raise InvalidInput("data must contain at least one frame")
    return np.stack([np.asarray(getattr(x, "matrix", x), dtype=float) for x in data])


def axial_scatter(frames) -> np.ndarray:
    """Per-axis scatter matrices T_r = mean x_r x_r^T, shape r x k x k"""
    F = _frame_stack(frames) if not isinstance(frames, np.ndarray) else frames
    return np.einsum("nir,njr->rij", F, F) / F.shape[0]


def _frame_objective(U, T):
    return float(np.einsum("ir,rij,jr->", U, T, U))


def _polar(A):
    return linalg.polar(A)[0]


def frame_mean_arnold_jupp(data, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> BaselineResult:
    """
    Frame mean maximizing sum_r u_r^T T_r u_r over orthogonal U

    Minorize-maximize updates U <- polar([T_1 u_1, ..., T_r u_r]) ascend the
    convex objective. Starts: per-axis leading eigenvectors pushed to a frame,
    the identity, and the first datum; the best local maximum wins.

    Args:
        data: ProjStiefelPoints or n x k x k array of square frames

    Returns:
        BaselineResult: canonical ProjStiefelPoint estimate
    """
    settings = get_settings()
    F = _frame_stack(data)
    if F.shape[1] != F.shape[2]:
        raise InvalidInput("frame mean needs square frames")
    T = axial_scatter(F)
    leaders = np.column_stack([sym_eig(Tr).eigenvectors[:, 0] for Tr in T])
    starts = [_polar(leaders), np.eye(F.shape[1]), F[0]]

    best: Optional[BaselineResult] = None
    for start in starts:
        U = start.copy()
        objective = _frame_objective(U, T)
        history = [objective]
        converged = False
        for iteration in range(1, max_iter + 1):
            candidate = _polar(np.einsum("rij,jr->ir", T, U))
            new_objective = _frame_objective(candidate, T)
            if settings.debug_descent:
                assert new_objective >= objective - 1e-12, f"frame mean ascent failed at iteration {iteration}"
            moved = np.linalg.norm(candidate - U)
            U, gain, objective = candidate, new_objective - objective, new_objective
            history.append(objective)
            if abs(gain) <= tol * max(1.0, abs(objective)) and moved <= np.sqrt(tol):
                converged = True
                break
        else:
            iteration = max_iter
        if best is None or objective > best.objective + 1e-12:
            best = BaselineResult(U, objective, iteration, converged, history)

    if not best.converged:
        logger.warning("frame mean did not converge in %d iterations", max_iter)
    best.estimate = canonicalize(ProjStiefelPoint.from_matrix(best.estimate, canonical=False))
    return best
