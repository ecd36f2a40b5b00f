"""
Experiment runners
Monte Carlo studies on planar shapes and axial frames, the moment-tensor
analysis with its modified datasets, and solver micro-benchmarks. Every
runner returns an ExperimentReport whose rows follow the column layout of
templates/report_template.py.
"""

import logging
import time
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from components.baselines import (
    frame_mean_arnold_jupp,
    frechet_mean_cp,
    frechet_median_cp,
    median_of_means_cp,
)
from components.bootstrap import FRAME_ESTIMATORS, bootstrap_estimator, ellipses_from_report
from components.manifolds import CPPoint, angular_error, pfm, project_cp, project_grassmann, project_stiefel
from components.median import WeightedSample, spatial_median
from components.moment_tensors import edit_dataset, extract_tbp_frame, filter_region, ingest_moment_tensors
from components.proj_stiefel import ProjStiefelPoint, embed_frame, frame_angular_errors, pfm_proj_stiefel
from components.samplers import (
    SHAPE_CONFIGS,
    ComplexBinghamParams,
    FrameWatsonParams,
    RngSeed,
    contaminate,
    frame_outlier,
    make_rng,
    preshape,
    sample_complex_bingham,
    sample_frame_watson,
    shape_outliers,
)
from templates.report_template import ReportTemplate
from utils.config import SCHEMA_VERSION, ExperimentConfig
from utils.errors import InvalidInput, PFMError
from utils.helpers import run_indexed, to_builtin

logger = logging.getLogger(__name__)

# Stream tags under (seed, cell, replicate)
SAMPLE_STREAM, OUTLIER_STREAM, INIT_STREAM, BOOTSTRAP_STREAM = 0, 1, 2, 3


@dataclass
class ExperimentReport:
    """Tabular results, failure ledger and plot data of one experiment run"""

    name: str
    kind: str
    config: Dict[str, Any]
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)
    timing: Dict[str, Any] = field(default_factory=dict)
    dry_run: bool = False

    @property
    def n_failed(self) -> int:
        return len(self.failures)

    def to_frame(self) -> pd.DataFrame:
        """Rows as a DataFrame in the template's column order"""
        return pd.DataFrame(self.rows, columns=self.columns)

    def to_payload(self) -> Dict[str, Any]:
        """JSON document (timings excluded so equal seeds give equal bytes)"""
        return to_builtin(
            {
                "schema_version": SCHEMA_VERSION,
                "name": self.name,
                "kind": self.kind,
                "dry_run": self.dry_run,
                "config": self.config,
                "columns": self.columns,
                "rows": self.rows,
                "failures": self.failures,
                "extras": self.extras,
            }
        )

    @classmethod
    def from_payload(cls, payload: Dict[str, Any]) -> "ExperimentReport":
        return cls(
            name=payload["name"],
            kind=payload["kind"],
            config=payload["config"],
            columns=list(payload["columns"]),
            rows=list(payload["rows"]),
            failures=list(payload["failures"]),
            extras=dict(payload.get("extras", {})),
            dry_run=bool(payload.get("dry_run", False)),
        )


def _failure(cell, replicate, estimator, error_type, message):
    return {
        "cell": cell,
        "replicate": replicate,
        "estimator": estimator,
        "error_type": error_type,
        "message": message,
    }


def _summary(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.nan, np.nan, np.nan
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return float(np.median(values)), sd, float(values.mean())


def _new_report(config: ExperimentConfig, dry_run=False) -> ExperimentReport:
    return ExperimentReport(
        name=config.name,
        kind=config.kind,
        config=config.to_dict(),
        columns=ReportTemplate.get_columns(config.kind),
        dry_run=dry_run,
    )


# ---------------------------------------------------------------------------
# Planar shapes on complex projective space
# ---------------------------------------------------------------------------


def _shape_estimates(X, z0, estimators, mom_subsets, adversarial_init, seed: RngSeed):
    """Run each requested estimator; returns {name: (estimate, converged)} and failures"""
    init = None
    if adversarial_init:
        init = shape_outliers(z0, 1, seed.child(INIT_STREAM).generator())[0]
    estimates, failures = {}, []
    for name in estimators:
        try:
            if name == "EMedian":
                point, result = pfm([CPPoint.from_vector(x) for x in X])
                estimates[name] = (point.vector, result.converged)
            elif name == "IMean":
                result = frechet_mean_cp(X, init=init)
                estimates[name] = (result.estimate, result.converged)
            elif name == "IMedian":
                result = frechet_median_cp(X, init=init)
                estimates[name] = (result.estimate, result.converged)
            elif name == "MoM":
                result = median_of_means_cp(X, n_subsets=mom_subsets, seed=seed.child(INIT_STREAM, 1).generator(), init=init)
                estimates[name] = (result.estimate, result.converged)
        except PFMError as e:
            failures.append((name, type(e).__name__, str(e)))
    return estimates, failures


def _shape_replicate(replicate, cell, seed, n, n1, kappa, shape, estimators, mom_subsets, adversarial_init):
    stream = RngSeed(seed, (cell, replicate))
    z0 = preshape(SHAPE_CONFIGS[shape])
    outcome = {"replicate": replicate, "errors": {}, "nonconverged": [], "failures": []}
    try:
        sample = sample_complex_bingham(ComplexBinghamParams.from_mode(z0, kappa), n, stream.child(SAMPLE_STREAM).generator())
        X, _ = contaminate(
            sample,
            lambda count, rng: shape_outliers(z0, count, rng),
            n1,
            stream.child(OUTLIER_STREAM).generator(),
        )
    except PFMError as e:
        outcome["failures"].append(("sampler", type(e).__name__, str(e)))
        return outcome
    estimates, failures = _shape_estimates(X, z0, estimators, mom_subsets, adversarial_init, stream)
    outcome["failures"].extend(failures)
    for name, (z_hat, converged) in estimates.items():
        try:
            outcome["errors"][name] = angular_error(z_hat, z0)
        except PFMError as e:
            outcome["failures"].append((name, type(e).__name__, str(e)))
            continue
        if not converged:
            outcome["nonconverged"].append(name)
    return outcome


def run_shape_experiment(config: ExperimentConfig) -> ExperimentReport:
    """
    Planar-shape study: complex Bingham samples with outliers orthogonal to the mode

    Cells are (shape, number of outliers); rows report the median, sd and mean of
    the angular error arccos(|z0^* z_hat|) per estimator.

    Args:
        config (ExperimentConfig): shape-table scenario

    Returns:
        ExperimentReport: Table-1 layout, per-replicate errors in extras["errors"]
    """
    started = time.perf_counter()
    report = _new_report(config, dry_run=config.is_dry_run)
    distribution = config.distribution
    shapes = distribution["shapes"]
    mom_subsets = int(distribution.get("mom_subsets", 7))
    adversarial_init = bool(distribution.get("adversarial_init", True))
    report.extras["errors"] = {}
    report.timing["cells"] = {}

    cell = 0
    for shape in shapes:
        kappa = float(distribution["kappa"][str(shape)])
        for n1 in config.contamination:
            label = f"shape{shape}_outliers{n1}"
            cell_started = time.perf_counter()
            outcomes = []
            if not report.dry_run:
                task = partial(
                    _shape_replicate,
                    cell=cell,
                    seed=config.seed,
                    n=config.n,
                    n1=n1,
                    kappa=kappa,
                    shape=shape,
                    estimators=tuple(config.estimators),
                    mom_subsets=mom_subsets,
                    adversarial_init=adversarial_init,
                )
                outcomes = run_indexed(task, range(config.replicates), config.workers)
            outcomes.sort(key=lambda o: o["replicate"])

            errors = {name: [] for name in config.estimators}
            nonconverged = {name: 0 for name in config.estimators}
            failed = {name: 0 for name in config.estimators}
            for outcome in outcomes:
                for name, error_type, message in outcome["failures"]:
                    report.failures.append(_failure(label, outcome["replicate"], name, error_type, message))
                    if name in failed:
                        failed[name] += 1
                    else:
                        for key in failed:
                            failed[key] += 1
                for name, value in outcome["errors"].items():
                    errors[name].append(value)
                for name in outcome["nonconverged"]:
                    nonconverged[name] += 1

            for name in config.estimators:
                median, sd, mean = _summary(errors[name])
                report.rows.append(
                    {
                        "shape": shape,
                        "outliers": n1,
                        "estimator": name,
                        "median_error": median,
                        "sd_error": sd,
                        "mean_error": mean,
                        "successes": len(errors[name]),
                        "failures": failed[name],
                        "nonconverged": nonconverged[name],
                    }
                )
            report.extras["errors"][label] = errors
            report.timing["cells"][label] = time.perf_counter() - cell_started
            logger.info("shape %d, %d outliers: %d replicates done", shape, n1, len(outcomes))
            cell += 1

    report.timing["total_seconds"] = time.perf_counter() - started
    return report


# ---------------------------------------------------------------------------
# Axial frames on the projective Stiefel manifold
# ---------------------------------------------------------------------------


def _frame_replicate(replicate, cell, seed, n, n1, kappas, estimators, bootstrap):
    stream = RngSeed(seed, (cell, replicate))
    truth = ProjStiefelPoint.from_matrix(np.eye(len(kappas)))
    outcome = {"replicate": replicate, "errors": {}, "failures": [], "covered": None}
    try:
        draws = sample_frame_watson(FrameWatsonParams(tuple(kappas), truth), n, stream.child(SAMPLE_STREAM).generator())
        X, _ = contaminate(draws.matrices, frame_outlier(), n1, stream.child(OUTLIER_STREAM).generator())
    except PFMError as e:
        outcome["failures"].append(("sampler", type(e).__name__, str(e)))
        return outcome

    for name in estimators:
        try:
            if name == "mean":
                estimate = frame_mean_arnold_jupp(X).estimate
            else:
                estimate = pfm_proj_stiefel(X)[0]
            outcome["errors"][name] = frame_angular_errors(estimate, truth).tolist()
        except PFMError as e:
            outcome["failures"].append((name, type(e).__name__, str(e)))

    if bootstrap.get("enabled") and "median" in outcome["errors"]:
        try:
            boot = bootstrap_estimator(X, "median", int(bootstrap["B"]), stream.child(BOOTSTRAP_STREAM), level=float(bootstrap.get("level", 0.95)))
            ellipses = ellipses_from_report(boot, bootstrap.get("strategy", "tangent_mahalanobis"))
            outcome["covered"] = [ellipse.contains(truth.matrix[:, j]) for j, ellipse in enumerate(ellipses)]
        except PFMError as e:
            outcome["failures"].append(("bootstrap", type(e).__name__, str(e)))
    return outcome


def run_frame_experiment(config: ExperimentConfig) -> ExperimentReport:
    """
    Axial-frame study: frame Watson samples contaminated with a fixed outlying frame

    Cells are (concentration case, number of outliers); rows report per-axis
    mean and sd of arccos(|m_j^T m_hat_j|). With bootstrap enabled, the
    coverage column holds the fraction of runs whose true axis lies inside the
    median's pivotal ellipse.

    Args:
        config (ExperimentConfig): frame-table scenario

    Returns:
        ExperimentReport: Table-2 layout
    """
    started = time.perf_counter()
    report = _new_report(config, dry_run=config.is_dry_run)
    bootstrap = dict(config.bootstrap or {})
    axis_labels = ReportTemplate.AXIS_LABELS["frame-table"]
    report.extras["errors"] = {}
    report.timing["cells"] = {}

    cell = 0
    for case_number, kappas in enumerate(config.distribution["cases"], start=1):
        kappa_label = "/".join(f"{k:g}" for k in kappas)
        for n1 in config.contamination:
            label = f"case{case_number}_outliers{n1}"
            cell_started = time.perf_counter()
            outcomes = []
            if not report.dry_run:
                task = partial(
                    _frame_replicate,
                    cell=cell,
                    seed=config.seed,
                    n=config.n,
                    n1=n1,
                    kappas=tuple(float(k) for k in kappas),
                    estimators=tuple(config.estimators),
                    bootstrap=bootstrap,
                )
                outcomes = run_indexed(task, range(config.replicates), config.workers)
            outcomes.sort(key=lambda o: o["replicate"])

            errors = {name: [] for name in config.estimators}
            failed = {name: 0 for name in config.estimators}
            covered = []
            for outcome in outcomes:
                for name, error_type, message in outcome["failures"]:
                    report.failures.append(_failure(label, outcome["replicate"], name, error_type, message))
                    if name in failed:
                        failed[name] += 1
                    elif name == "sampler":
                        for key in failed:
                            failed[key] += 1
                for name, value in outcome["errors"].items():
                    errors[name].append(value)
                if outcome["covered"] is not None:
                    covered.append(outcome["covered"])

            coverage = np.mean(np.array(covered, dtype=float), axis=0) if covered else None
            for name in config.estimators:
                per_axis = np.array(errors[name], dtype=float).reshape(-1, len(kappas))
                for j, axis in enumerate(axis_labels[: len(kappas)]):
                    median, sd, mean = _summary(per_axis[:, j])
                    report.rows.append(
                        {
                            "case": case_number,
                            "kappa": kappa_label,
                            "outliers": n1,
                            "estimator": name,
                            "axis": axis,
                            "mean_error": mean,
                            "sd_error": sd,
                            "median_error": median,
                            "successes": per_axis.shape[0],
                            "failures": failed[name],
                            "coverage": float(coverage[j]) if coverage is not None and name == "median" else np.nan,
                        }
                    )
            report.extras["errors"][label] = errors
            report.timing["cells"][label] = time.perf_counter() - cell_started
            logger.info("case %d, %d outliers: %d replicates done", case_number, n1, len(outcomes))
            cell += 1

    report.timing["total_seconds"] = time.perf_counter() - started
    return report


# ---------------------------------------------------------------------------
# Moment-tensor analysis
# ---------------------------------------------------------------------------


def _frame_shift(a, b) -> float:
    """Extrinsic distance between two axial frames through their sign-invariant embedding"""
    return float(np.linalg.norm(embed_frame(a).components - embed_frame(b).components))


def _hemisphere(axis):
    """Representative of an axis with nonnegative last coordinate"""
    return axis if axis[-1] >= 0 else -axis


def run_earthquake_analysis(config: ExperimentConfig) -> ExperimentReport:
    """
    Frame mean and median of T/B/P axes for one region and its modified datasets

    Each variant applies drop_indices / duplicate_indices to the region's
    events (0-based, in file order). Rows give every estimated axis with its
    bootstrap SE, the variant's shift from the unmodified estimate and the
    pivotal ellipse area.

    Args:
        config (ExperimentConfig): earthquake scenario

    Returns:
        ExperimentReport: Table-3 layout; event eigenvalues in extras["events"]
    """
    started = time.perf_counter()
    report = _new_report(config, dry_run=config.is_dry_run)
    data = config.data
    records = filter_region(ingest_moment_tensors(data["path"]), data.get("region"))

    frames, kept = [], []
    for index, record in enumerate(records):
        try:
            frames.append(extract_tbp_frame(record))
            kept.append(record)
        except PFMError as e:
            report.failures.append(_failure("events", index, "extract_tbp_frame", type(e).__name__, str(e)))
    if len(frames) < 2:
        raise InvalidInput(f"region {data.get('region')!r} has {len(frames)} usable events; need at least 2")

    report.extras["events"] = [
        {
            "event_id": r.event_id,
            "region": r.region,
            "lambda1": float(r.eigenvalues[0]),
            "lambda2": float(r.eigenvalues[1]),
            "lambda3": float(r.eigenvalues[2]),
            "trace": r.trace,
        }
        for r in kept
    ]
    report.extras["event_axes"] = [[_hemisphere(f.matrix[:, j]).tolist() for j in range(3)] for f in frames]
    report.extras["ellipses"] = {}
    if report.dry_run:
        for label in data["variants"]:
            for name in config.estimators:
                for axis in ReportTemplate.AXIS_LABELS["earthquake"]:
                    report.rows.append(
                        dict.fromkeys(report.columns, np.nan) | {"variant": label, "estimator": name, "axis": axis}
                    )
        return report

    bootstrap = dict(config.bootstrap or {})
    reference_label = next(iter(data["variants"]))
    full_estimates: Dict[str, np.ndarray] = {}
    stack = np.stack([f.matrix for f in frames])
    for variant_index, (label, edit) in enumerate(data["variants"].items()):
        edited = np.stack(edit_dataset(list(stack), edit.get("drop_indices", []), edit.get("duplicate_indices", {})))
        for estimator_index, name in enumerate(config.estimators):
            cell = f"{label}/{name}"
            try:
                estimate = ProjStiefelPoint.from_matrix(FRAME_ESTIMATORS[name](edited), labels=("T", "B", "P"))
            except PFMError as e:
                report.failures.append(_failure(cell, 0, name, type(e).__name__, str(e)))
                continue
            if label == reference_label:
                full_estimates[name] = estimate.matrix
            if name in full_estimates:
                shift = _frame_shift(estimate.matrix, full_estimates[name])
            else:
                shift = np.nan
                report.failures.append(
                    _failure(cell, 0, name, "MissingReference", f"no {reference_label} estimate to measure the shift from")
                )

            se = np.full(3, np.nan)
            areas = np.full(3, np.nan)
            if bootstrap.get("enabled"):
                seed = RngSeed(config.seed, (variant_index, estimator_index, BOOTSTRAP_STREAM))
                boot = bootstrap_estimator(edited, name, int(bootstrap["B"]), seed, workers=config.workers, level=float(bootstrap.get("level", 0.95)))
                for failure in boot.failures:
                    report.failures.append(_failure(cell, failure["replicate"], name, failure["error_type"], failure["message"]))
                se = boot.per_axis_se
                try:
                    ellipses = ellipses_from_report(boot, bootstrap.get("strategy", "tangent_mahalanobis"))
                except PFMError as e:
                    report.failures.append(_failure(cell, -1, "ellipse", type(e).__name__, str(e)))
                    ellipses = []
                areas = np.array([e.area for e in ellipses]) if ellipses else areas
                report.extras["ellipses"][cell] = [
                    {
                        "axis": e.axis,
                        "basis": e.basis,
                        "covariance": e.covariance,
                        "radius2": e.radius2,
                        "degenerate": e.degenerate,
                        "interval_radius": e.interval_radius,
                    }
                    for e in ellipses
                ]

            for j, axis in enumerate(ReportTemplate.AXIS_LABELS["earthquake"]):
                vector = estimate.matrix[:, j]
                report.rows.append(
                    {
                        "variant": label,
                        "estimator": name,
                        "n_events": edited.shape[0],
                        "axis": axis,
                        "x": vector[0],
                        "y": vector[1],
                        "z": vector[2],
                        "se": se[j],
                        "shift": shift,
                        "ellipse_area": areas[j],
                    }
                )
        logger.info("variant %s: %d events", label, edited.shape[0])

    report.timing["total_seconds"] = time.perf_counter() - started
    return report


# ---------------------------------------------------------------------------
# Micro-benchmarks
# ---------------------------------------------------------------------------


def _random_orthogonal(rng, k):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


def _bench_operations(rng, n, k):
    frames = np.stack([_random_orthogonal(rng, k) for _ in range(n)])
    points = rng.standard_normal((n, k))
    A = rng.standard_normal((k, k))
    S = A + A.T
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    z /= np.linalg.norm(z)
    H = np.outer(z, z.conj()) + 0.01 * (rng.standard_normal((k, k)) * (1 + 1j))
    H = 0.5 * (H + H.conj().T)
    return {
        "spatial_median": lambda: spatial_median(WeightedSample(points)),
        "project_stiefel": lambda: project_stiefel(A),
        "project_grassmann": lambda: project_grassmann(S, max(1, k // 2)),
        "project_cp": lambda: project_cp(H),
        "pfm_proj_stiefel": lambda: pfm_proj_stiefel(frames),
    }


def run_benchmark(config: ExperimentConfig) -> ExperimentReport:
    """
    Time the median solver, the three projections and the frame PFM

    Rows list the completed repeats per (operation, n, k); wall-clock
    timings go to report.timing["operations"] so the rows stay reproducible.

    Args:
        config (ExperimentConfig): bench scenario; replicates is the repeat count

    Returns:
        ExperimentReport: one row per (operation, n, k)
    """
    report = _new_report(config, dry_run=config.is_dry_run)
    report.timing["operations"] = []
    repeats = max(config.replicates, 0)
    for cell, (n, k) in enumerate((n, k) for n in config.bench["sizes"] for k in config.bench["dims"]):
        operations = _bench_operations(make_rng(config.seed, cell), n, k)
        for operation, fn in operations.items():
            timings = []
            for _ in range(repeats):
                tic = time.perf_counter()
                try:
                    fn()
                except PFMError as e:
                    report.failures.append(_failure(f"{operation}/n{n}/k{k}", len(timings), operation, type(e).__name__, str(e)))
                    break
                timings.append(time.perf_counter() - tic)
            report.rows.append({"operation": operation, "n": n, "k": k, "repeats": len(timings)})
            report.timing["operations"].append(
                {
                    "operation": operation,
                    "n": n,
                    "k": k,
                    "median_seconds": float(np.median(timings)) if timings else None,
                    "min_seconds": float(np.min(timings)) if timings else None,
                }
            )
    return report


RUNNERS = {
    "shape-table": run_shape_experiment,
    "frame-table": run_frame_experiment,
    "earthquake": run_earthquake_analysis,
    "bench": run_benchmark,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch a validated config to its runner"""
    if config.kind not in RUNNERS:
        raise InvalidInput(f"unknown scenario kind '{config.kind}'")
    logger.info("running %s (%s, %d replicates, seed %d)", config.name, config.kind, config.replicates, config.seed)
    return RUNNERS[config.kind](config)
