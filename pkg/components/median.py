"""
Ambient Frobenius / spatial median
Weiszfeld iteration with the Vardi-Zhang modification for iterates that land
on data points. Matrix data is vectorized with the structure-appropriate
isometry, solved as a Euclidean spatial median and mapped back.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from components.vectorize import (
    unvec,
    unvec_hermitian,
    unvech_sqrt2,
    vec,
    vec_hermitian,
    vech_sqrt2,
)
from utils.config import get_settings
from utils.errors import InvalidInput

logger = logging.getLogger(__name__)

ANCHOR_TOL = 1e-14
WEIGHT_SUM_TOL = 1e-12


class Structure(str, Enum):
    """Structure tag of an ambient matrix, selecting the vectorization"""

    GENERAL = "general"
    SYMMETRIC = "symmetric"
    HERMITIAN = "hermitian"
    SYMMETRIC_TUPLE = "symmetric-tuple"


@dataclass(frozen=True)
class AmbientMatrix:
    """
    Element of an ambient linear space

    values is k x t for GENERAL / SYMMETRIC / HERMITIAN and r x k x k for
    SYMMETRIC_TUPLE.
    """

    values: np.ndarray
    structure: Structure = Structure.GENERAL

    @property
    def shape(self):
        return self.values.shape

    def to_vector(self) -> np.ndarray:
        """Structure-appropriate isometric vectorization"""
        if self.structure is Structure.GENERAL:
            return vec(self.values)
        if self.structure is Structure.SYMMETRIC:
            return vech_sqrt2(self.values)
        if self.structure is Structure.HERMITIAN:
            return vec_hermitian(self.values)
        return np.concatenate([vech_sqrt2(B) for B in self.values])

    @classmethod
    def from_vector(cls, v, structure, shape):
        """Inverse of to_vector for a given structure and shape"""
        structure = Structure(structure)
        if structure is Structure.GENERAL:
            return cls(unvec(v, *shape), structure)
        if structure is Structure.SYMMETRIC:
            return cls(unvech_sqrt2(v), structure)
        if structure is Structure.HERMITIAN:
            return cls(unvec_hermitian(v), structure)
        r, k, _ = shape
        pieces = np.split(np.asarray(v, dtype=float), r)
        if any(p.size != k * (k + 1) // 2 for p in pieces):
            raise InvalidInput("tuple vector length does not match r x k x k")
        return cls(np.stack([unvech_sqrt2(p) for p in pieces]), structure)

    def __sub__(self, other):
        return AmbientMatrix(self.values - other.values, self.structure)


@dataclass
class WeightedSample:
    """Vectorized sample with probability weights"""

    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        n = self.points.shape[0]
        if n == 0 or self.points.shape[1] == 0:
            raise InvalidInput("sample must contain at least one point")
        if not np.all(np.isfinite(self.points)):
            raise InvalidInput("sample contains non-finite entries")
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        else:
            self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if self.weights.size != n:
                raise InvalidInput("weights must match the number of points")
            if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise InvalidInput("weights must be nonnegative and sum to 1")

    @classmethod
    def mixture(cls, points, z, eps):
        """
        Empirical F_0 contaminated by a point mass: (1 - eps) F_0 + eps delta_z

        Args:
            points: n x p atoms of F_0 (uniform weights)
            z: length-p contaminating point
            eps (float): contamination weight in [0, 1)
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        weights = np.append(np.full(n, (1.0 - eps) / n), eps)
        return cls(np.vstack([points, np.asarray(z, dtype=float)]), weights)


@dataclass
class MedianResult:
    """Outcome of a spatial / Frobenius median solve"""

    median: object
    iterations: int
    gap: float
    converged: bool
    objective: float
    nonunique: bool = False
    anchor_index: Optional[int] = None
    history: List[float] = field(default_factory=list, repr=False)


def weighted_objective(points, weights, m) -> float:
    """Sum of weighted Euclidean distances from m to the points"""
    return float(weights @ np.linalg.norm(points - m, axis=1))


def _flat_direction(points, weights, m):
    """Colinear data with a flat objective along the line through m"""
    n = points.shape[0]
    if n < 2:
        return False
    centred = points - points.mean(axis=0)
    _, sv, vt = np.linalg.svd(centred, full_matrices=False)
    scale = max(1.0, float(sv[0]) if sv.size else 1.0)
    if sv.size > 1 and sv[1] > 1e-10 * scale:
        return False
    if sv.size == 0 or sv[0] <= 1e-14:
        return False
    u = vt[0]
    t = (points - m) @ u
    tol = 1e-9 * scale
    left = weights[t < -tol].sum()
    right = weights[t > tol].sum()
    at = weights[np.abs(t) <= tol].sum()
    return abs(left + at - right) < 1e-12 or abs(right + at - left) < 1e-12


def spatial_median(sample: WeightedSample, tol=None, max_iter=None, init=None, debug=None) -> MedianResult:
    """
    Weighted spatial median by the Vardi-Zhang modified Weiszfeld iteration

    Args:
        sample (WeightedSample): points and weights
        tol (float): relative iterate-change tolerance
        max_iter (int): iteration cap; hitting it returns converged=False
        init: optional start point (defaults to the weighted coordinatewise mean)
        debug (bool): assert monotone descent on every iteration

    Returns:
        MedianResult: median vector, iterations, gap, convergence flag, objective
    """
    settings = get_settings()
    tol = settings.median_tol if tol is None else tol
    max_iter = settings.median_max_iter if max_iter is None else max_iter
    debug = settings.debug_descent if debug is None else debug

    X, w = sample.points, sample.weights
    n = X.shape[0]
    if n == 1 or np.all(X == X[0]):
        return MedianResult(X[0].copy(), 0, 0.0, True, 0.0, anchor_index=0)

    y = (w @ X) / w.sum() if init is None else np.asarray(init, dtype=float).copy()
    objective = weighted_objective(X, w, y)
    history = [objective]
    gap = np.inf
    anchor = None

    for iteration in range(1, max_iter + 1):
        diff = X - y
        dist = np.linalg.norm(diff, axis=1)
        scale = max(1.0, float(np.linalg.norm(y)))
        on_point = dist <= ANCHOR_TOL * scale
        eta = w[on_point].sum()
        free = ~on_point
        inv = w[free] / dist[free]
        R = inv @ diff[free]
        r_norm = float(np.linalg.norm(R))

        if eta > 0 and r_norm <= eta:
            # Vardi-Zhang optimality at a data point
            anchor = int(np.flatnonzero(on_point)[0])
            gap = 0.0
            break

        T = (inv @ X[free]) / inv.sum()
        if eta > 0:
            frac = min(1.0, eta / r_norm)
            y_new = (1.0 - frac) * T + frac * y
        else:
            y_new = T

        gap = float(np.linalg.norm(y_new - y)) / scale
        new_objective = weighted_objective(X, w, y_new)
        if debug:
            assert new_objective <= objective * (1 + 1e-12) + 1e-300, (
                f"Weiszfeld ascent at iteration {iteration}: {objective} -> {new_objective}"
            )
        y, objective = y_new, new_objective
        history.append(objective)
        if gap <= tol:
            break
    else:
        iteration = max_iter

    converged = gap <= tol
    if not converged:
        logger.warning("spatial median did not converge in %d iterations (gap %.3e)", max_iter, gap)
    result = MedianResult(
        median=y,
        iterations=iteration,
        gap=float(gap),
        converged=converged,
        objective=objective,
        anchor_index=anchor,
        history=history,
    )
    result.nonunique = _flat_direction(X, w, y)
    return result


def _check_homogeneous(data: Sequence[AmbientMatrix]):
    if len(data) == 0:
        raise InvalidInput("data must contain at least one matrix")
    first = data[0]
    for i, item in enumerate(data):
        if item.structure is not first.structure or item.values.shape != first.values.shape:
            raise InvalidInput(
                f"datum {i} has shape {item.values.shape} / {item.structure.value}, "
                f"expected {first.values.shape} / {first.structure.value}"
            )
    return first.structure, first.values.shape


def frobenius_median(data: Sequence[AmbientMatrix], tol=None, max_iter=None, weights=None) -> MedianResult:
    """
    Frobenius median of matrices sharing shape and structure

    Args:
        data (list): AmbientMatrix observations
        tol (float): solver tolerance
        max_iter (int): iteration cap
        weights: optional probability weights (mixture distributions)

    Returns:
        MedianResult: median is an AmbientMatrix with the data's structure tag
    """
    structure, shape = _check_homogeneous(data)
    points = np.vstack([item.to_vector() for item in data])
    result = spatial_median(WeightedSample(points, weights), tol=tol, max_iter=max_iter)
    result.median = AmbientMatrix.from_vector(result.median, structure, shape)
    return result


def tuple_frobenius_median(data, tol=None, max_iter=None, weights=None) -> MedianResult:
    """
    Median in the product space of symmetric-matrix r-tuples

    Minimizes sum_i {sum_j |B_j - X_ij|_F^2}^(1/2); the concatenated
    vech_sqrt2 vectors make this a plain spatial median.

    Args:
        data (list): r x k x k arrays (or AmbientMatrix tuples)

    Returns:
        MedianResult: median is an AmbientMatrix tagged SYMMETRIC_TUPLE
    """
    items = [
        d if isinstance(d, AmbientMatrix) else AmbientMatrix(np.asarray(d, dtype=float), Structure.SYMMETRIC_TUPLE)
        for d in data
    ]
    if any(item.structure is not Structure.SYMMETRIC_TUPLE or item.values.ndim != 3 for item in items):
        raise InvalidInput("tuple median expects r x k x k symmetric tuples")
    return frobenius_median(items, tol=tol, max_iter=max_iter, weights=weights)
