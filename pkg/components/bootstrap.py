"""
Nonparametric bootstrap for projected medians
Standard errors from resampled estimates aligned to the point estimate, and
per-axis pivotal confidence ellipses in the tangent plane of each estimated
axis.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import special, stats

from components.baselines import frame_mean_arnold_jupp, procrustes_align
from components.proj_stiefel import pfm_proj_stiefel
from components.samplers import RngSeed, make_rng
from utils.errors import InvalidInput, PFMError
from utils.helpers import run_indexed

logger = logging.getLogger(__name__)

COVARIANCE_FLOOR = 1e-12


def frame_median_estimator(frames):
    """Canonical projected Frobenius median of a stack of frames"""
    return pfm_proj_stiefel(frames)[0].matrix


def frame_mean_estimator(frames):
    """Frame mean maximizing the summed axial scatter"""
    return frame_mean_arnold_jupp(frames).estimate.matrix


FRAME_ESTIMATORS: Dict[str, Callable] = {
    "median": frame_median_estimator,
    "mean": frame_mean_estimator,
}


def _estimate_array(result):
    if hasattr(result, "estimate"):
        result = result.estimate
    if hasattr(result, "matrix"):
        result = result.matrix
    return np.asarray(result)


@dataclass
class AxisEllipse:
    """
    Confidence region {v : v^T S^{-1} v <= radius2} in the tangent plane at an axis

    Tangent coordinates use the remaining estimated axes as basis. When the
    covariance is rank deficient the region falls back to a geodesic disc of
    angular radius interval_radius.
    """

    axis: np.ndarray
    basis: np.ndarray
    covariance: np.ndarray
    radius2: float
    level: float
    degenerate: bool = False
    interval_radius: Optional[float] = None

    def coordinates(self, axis) -> np.ndarray:
        """Log map of an axis (sign-aligned) into tangent coordinates"""
        return axial_log_map(np.asarray(axis, dtype=float), self.axis, self.basis)

    def contains(self, axis) -> bool:
        v = self.coordinates(axis)
        if self.degenerate:
            return bool(np.linalg.norm(v) <= self.interval_radius)
        return bool(v @ np.linalg.solve(self.covariance, v) <= self.radius2)

    @property
    def area(self) -> float:
        d = self.basis.shape[1]
        log_unit_ball = 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d + 1)
        if self.degenerate:
            return float(np.exp(log_unit_ball) * self.interval_radius**d)
        return float(np.exp(log_unit_ball) * self.radius2 ** (d / 2) * np.sqrt(np.linalg.det(self.covariance)))


@dataclass
class BootstrapReport:
    """Bootstrap replicates, per-axis standard errors and optional ellipses"""

    estimate: np.ndarray
    replicates: np.ndarray
    errors: np.ndarray
    per_axis_se: np.ndarray
    level: float
    B: int
    failures: List[dict] = field(default_factory=list)
    ellipses: Optional[List[AxisEllipse]] = None

    @property
    def n_failed(self) -> int:
        return len(self.failures)


def axial_log_map(axis, center, basis) -> np.ndarray:
    """
    Log map of an axis at center on the axial sphere, in the given tangent basis

    The axis is sign-aligned with center first, so +a and -a map to the same point.
    """
    a = axis if axis @ center >= 0 else -axis
    cosine = float(np.clip(a @ center, -1.0, 1.0))
    residual = a - cosine * center
    norm = np.linalg.norm(residual)
    if norm <= 1e-15:
        return np.zeros(basis.shape[1])
    return basis.T @ (np.arccos(cosine) * residual / norm)


def _align_frame(replicate, estimate):
    signs = np.sign(np.sum(replicate * estimate, axis=0))
    signs[signs == 0] = 1.0
    return replicate * signs


def _run_replicate(index, data, estimator, seed):
    rng = seed.child(index).generator() if isinstance(seed, RngSeed) else make_rng(seed, index)
    draw = rng.integers(0, data.shape[0], size=data.shape[0])
    try:
        return index, _estimate_array(estimator(data[draw])), None
    except PFMError as e:
        return index, None, {"replicate": index, "error_type": type(e).__name__, "message": str(e)}


def bootstrap_estimator(data, estimator, B, seed, workers=1, level=0.95) -> BootstrapReport:
    """
    Resample with replacement, re-estimate and summarize angular deviations

    Frames are sign-aligned axis by axis to the full-data estimate; complex
    unit vectors (shapes) are Procrustes-aligned. SE is the sample standard
    deviation of arccos(|m_j^T m_j^(b)|) over replicates.

    Args:
        data: n x k x r frame stack or n x p complex unit vectors
        estimator: callable on a data stack, or "median" / "mean" for frames
        B (int): number of resamples (>= 2)
        seed: int or RngSeed; replicate b uses the child stream b
        workers (int): process pool size

    Returns:
        BootstrapReport: replicates, errors, SEs and failure ledger
    """
    if isinstance(estimator, str):
        if estimator not in FRAME_ESTIMATORS:
            raise InvalidInput(f"unknown estimator '{estimator}'")
        estimator = FRAME_ESTIMATORS[estimator]
    data = np.stack([np.asarray(getattr(x, "matrix", x)) for x in data]) if not isinstance(data, np.ndarray) else data
    if data.shape[0] < 2:
        raise InvalidInput("bootstrap needs n >= 2")
    if B < 2:
        raise InvalidInput("bootstrap needs B >= 2")

    estimate = _estimate_array(estimator(data))
    is_shape = np.iscomplexobj(estimate) and estimate.ndim == 1
    task = partial(_run_replicate, data=data, estimator=estimator, seed=seed)
    outcomes = run_indexed(task, range(B), workers)

    replicates, errors, failures = [], [], []
    for index, value, failure in outcomes:
        if failure is None and is_shape:
            try:
                value = procrustes_align(value, estimate)
            except PFMError as e:
                failure = {"replicate": index, "error_type": type(e).__name__, "message": str(e)}
        if failure is not None:
            failures.append(failure)
            continue
        if is_shape:
            errors.append([np.arccos(np.clip(abs(np.vdot(estimate, value)), 0.0, 1.0))])
        else:
            value = _align_frame(value, estimate)
            errors.append(np.arccos(np.clip(np.abs(np.sum(value * estimate, axis=0)), 0.0, 1.0)))
        replicates.append(value)

    if failures:
        logger.warning("%d of %d bootstrap replicates failed", len(failures), B)
    errors = np.array(errors) if errors else np.zeros((0, 1 if is_shape else estimate.shape[1]))
    se = errors.std(axis=0, ddof=1) if errors.shape[0] >= 2 else np.zeros(errors.shape[1])
    return BootstrapReport(
        estimate=estimate,
        replicates=np.array(replicates),
        errors=errors,
        per_axis_se=se,
        level=level,
        B=B,
        failures=failures,
    )


def _tangent_mahalanobis_radius(coordinates, covariance, level):
    """Level-quantile of the bootstrap Mahalanobis distances (pivotal calibration)"""
    distances = np.einsum("bi,ij,bj->b", coordinates, np.linalg.inv(covariance), coordinates)
    return float(np.quantile(distances, level))


def _chi_square_radius(coordinates, covariance, level):
    return float(stats.chi2.ppf(level, coordinates.shape[1]))


PIVOT_STRATEGIES: Dict[str, Callable] = {
    "tangent_mahalanobis": _tangent_mahalanobis_radius,
    "chi_square": _chi_square_radius,
}


def ellipses_from_report(report: BootstrapReport, strategy="tangent_mahalanobis") -> List[AxisEllipse]:
    """
    Per-axis confidence ellipses from frame bootstrap replicates

    Args:
        report (BootstrapReport): frame bootstrap output
        strategy (str): radius calibration, a key of PIVOT_STRATEGIES

    Returns:
        list: one AxisEllipse per estimated axis
    """
    if strategy not in PIVOT_STRATEGIES:
        raise InvalidInput(f"unknown pivot strategy '{strategy}'; expected one of {sorted(PIVOT_STRATEGIES)}")
    M = report.estimate
    if np.iscomplexobj(M) or M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput("pivotal ellipses need square frame estimates")
    ellipses = []
    for j in range(M.shape[1]):
        basis = np.delete(M, j, axis=1)
        coordinates = np.array([axial_log_map(R[:, j], M[:, j], basis) for R in report.replicates])
        d = basis.shape[1]
        covariance = np.cov(coordinates.T).reshape(d, d) if coordinates.shape[0] >= 2 else np.zeros((d, d))
        eigenvalues = np.linalg.eigvalsh(covariance) if coordinates.shape[0] >= 2 else np.zeros(d)
        degenerate = coordinates.shape[0] <= d or eigenvalues.min() <= COVARIANCE_FLOOR * max(eigenvalues.max(), 1e-300)
        if degenerate:
            spread = np.linalg.norm(coordinates, axis=1) if coordinates.size else np.zeros(1)
            radius = float(np.quantile(spread, report.level))
            logger.warning("axis %d: bootstrap covariance is rank deficient; using an angular interval", j)
            ellipses.append(AxisEllipse(M[:, j], basis, covariance, np.nan, report.level, True, radius))
            continue
        radius2 = PIVOT_STRATEGIES[strategy](coordinates, covariance, report.level)
        ellipses.append(AxisEllipse(M[:, j], basis, covariance, radius2, report.level))
    return ellipses


def pivotal_confidence_ellipse(
    data, B, level, seed, estimator="median", strategy="tangent_mahalanobis", workers=1
) -> List[AxisEllipse]:
    """
    Pivotal bootstrap confidence ellipses for every axis of a frame estimate

    Args:
        data: n x k x k frame stack or ProjStiefelPoints
        B (int): resamples
        level (float): confidence level
        seed (int): base seed
        estimator: "median", "mean" or a callable
        strategy (str): radius calibration

    Returns:
        list: AxisEllipse per axis
    """
    report = bootstrap_estimator(data, estimator, B, seed, workers=workers, level=level)
    return ellipses_from_report(report, strategy)
