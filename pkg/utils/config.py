"""
Configuration layer for the PFM experiment CLI
Reads tunable defaults from the environment (.env supported) and loads
declarative experiment configs from JSON documents.
"""

import copy
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from utils.errors import ConfigError
from utils.validators import validate_experiment_config

# Load environment variables
load_dotenv()

SCHEMA_VERSION = "1.0"
SCENARIO_KINDS = ("shape-table", "frame-table", "earthquake", "bench")


def _env_int(name, default):
    try:
        return int(os.getenv(name, default))
    except (TypeError, ValueError):
        return int(default)


def _env_float(name, default):
    try:
        return float(os.getenv(name, default))
    except (TypeError, ValueError):
        return float(default)


def _env_flag(name):
    return os.getenv(name, "").strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults resolved from the environment"""

    log_level: str
    workers: int
    output_dir: str
    desk_replicates: int
    full_replicates: int
    bootstrap_b: int
    median_tol: float
    median_max_iter: int
    debug_descent: bool


def get_settings() -> Settings:
    """
    Snapshot the environment-driven defaults

    Returns:
        Settings: current values (re-read on every call so tests can monkeypatch)
    """
    return Settings(
        log_level=os.getenv("PFM_LOG_LEVEL", "INFO").upper(),
        workers=max(1, _env_int("PFM_WORKERS", 1)),
        output_dir=os.getenv("PFM_OUTPUT_DIR", "results"),
        desk_replicates=_env_int("PFM_DESK_REPLICATES", 100),
        full_replicates=_env_int("PFM_FULL_REPLICATES", 500),
        bootstrap_b=_env_int("PFM_BOOTSTRAP_B", 1000),
        median_tol=_env_float("PFM_MEDIAN_TOL", 1e-10),
        median_max_iter=_env_int("PFM_MEDIAN_MAX_ITER", 10000),
        debug_descent=_env_flag("PFM_DEBUG_DESCENT"),
    )


@dataclass
class ExperimentConfig:
    """Declarative scenario: what to simulate, how often, and where to write"""

    kind: str
    name: str
    seed: int = 20240101
    replicates: int = 100
    n: int = 200
    contamination: List[int] = field(default_factory=list)
    estimators: List[str] = field(default_factory=list)
    distribution: Dict[str, Any] = field(default_factory=dict)
    bootstrap: Dict[str, Any] = field(default_factory=dict)
    data: Dict[str, Any] = field(default_factory=dict)
    bench: Dict[str, Any] = field(default_factory=dict)
    output: Dict[str, Any] = field(default_factory=dict)
    workers: int = 1
    full_scale: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Plain-dict form, echoed into reports"""
        return asdict(self)

    @property
    def is_dry_run(self) -> bool:
        return self.replicates == 0


# Desk-scale presets for the shipped studies; full-scale replicate
# counts are stored alongside so --full-scale can switch.
PRESETS: Dict[str, Dict[str, Any]] = {
    "table1": {
        "kind": "shape-table",
        "name": "table1",
        "n": 200,
        "contamination": [20, 40, 90],
        "estimators": ["EMedian", "IMean", "IMedian", "MoM"],
        "distribution": {
            "shapes": [1, 2, 3],
            "kappa": {"1": 150.0, "2": 150.0, "3": 200.0},
            "mom_subsets": 7,
            "adversarial_init": True,
        },
        "full_scale_replicates": 500,
    },
    "table2": {
        "kind": "frame-table",
        "name": "table2",
        "n": 50,
        "replicates": 250,
        "contamination": [0, 5, 15, 20],
        "estimators": ["mean", "median"],
        "distribution": {"cases": [[5.0, 5.0, 5.0], [25.0, 5.0, 5.0], [50.0, 25.0, 5.0]]},
        "bootstrap": {"enabled": False, "B": 200, "level": 0.95, "strategy": "tangent_mahalanobis"},
        "full_scale_replicates": 1000,
    },
    "figure3": {
        "kind": "frame-table",
        "name": "figure3",
        "n": 50,
        "contamination": [5],
        "estimators": ["mean", "median"],
        "distribution": {"cases": [[5.0, 5.0, 5.0]]},
        "bootstrap": {"enabled": True, "B": 200, "level": 0.95, "strategy": "tangent_mahalanobis"},
        "full_scale_replicates": 500,
    },
    "table3": {
        "kind": "earthquake",
        "name": "table3",
        "replicates": 1,
        "estimators": ["mean", "median"],
        "bootstrap": {"enabled": True, "B": 200, "level": 0.95, "strategy": "tangent_mahalanobis"},
        "data": {
            "path": "data/moment_tensors_sample.csv",
            "region": "2",
            "variants": {
                "full": {"drop_indices": [], "duplicate_indices": {}},
                "sub": {"drop_indices": [17, 19], "duplicate_indices": {}},
                "cont": {"drop_indices": [17, 19], "duplicate_indices": {"18": 2, "20": 2}},
            },
        },
        "full_scale_replicates": 1,
        "full_scale_bootstrap": 1000,
    },
    "bench": {
        "kind": "bench",
        "name": "bench",
        "replicates": 5,
        "bench": {"sizes": [50, 200, 1000], "dims": [3, 6]},
        "full_scale_replicates": 20,
    },
}

KIND_TO_PRESET = {
    "shape-table": "table1",
    "frame-table": "table2",
    "earthquake": "table3",
    "bench": "bench",
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; override wins, nested dicts are merged"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON config document

    Args:
        path (str): path to the config file

    Returns:
        dict: raw key-value tree
    """
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError([f"cannot read config {path}: {e}"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"]) from e
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return raw


def build_config(
    kind: str,
    file_values: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge preset < config file < CLI overrides and validate the result

    Args:
        kind (str): scenario kind or preset name
        file_values (dict): values read from --config
        overrides (dict): CLI flag values (None entries ignored)

    Returns:
        ExperimentConfig: validated config
    """
    settings = get_settings()
    file_values = dict(file_values or {})
    preset_name = file_values.pop("preset", None) or KIND_TO_PRESET.get(kind, kind)
    if preset_name not in PRESETS:
        raise ConfigError([f"unknown preset or kind '{preset_name}'"])

    merged = _merge(PRESETS[preset_name], file_values)
    merged.setdefault("workers", settings.workers)
    merged.setdefault("replicates", settings.desk_replicates)
    if merged.get("bootstrap", {}).get("enabled"):
        merged["bootstrap"].setdefault("B", settings.bootstrap_b)
    merged.setdefault("output", {})
    merged["output"].setdefault("dir", settings.output_dir)
    merged["output"].setdefault("formats", ["csv", "json"])

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    full_scale = bool(overrides.pop("full_scale", merged.get("full_scale", False)))
    merged["full_scale"] = full_scale
    if full_scale:
        merged["replicates"] = merged.get("full_scale_replicates", settings.full_replicates)
        if "full_scale_bootstrap" in merged:
            merged.setdefault("bootstrap", {})["B"] = merged["full_scale_bootstrap"]
    if "out" in overrides:
        merged["output"]["dir"] = overrides.pop("out")
    if "formats" in overrides:
        merged["output"]["formats"] = overrides.pop("formats")
    merged = _merge(merged, overrides)

    merged.pop("full_scale_replicates", None)
    merged.pop("full_scale_bootstrap", None)

    errors = validate_experiment_config(merged)
    if errors:
        raise ConfigError(errors)

    known = set(ExperimentConfig.__dataclass_fields__)
    return ExperimentConfig(**{k: v for k, v in merged.items() if k in known})


def load_config(kind: str, path: Optional[str] = None, **overrides) -> ExperimentConfig:
    """
    Load an experiment config for a CLI subcommand

    Args:
        kind (str): scenario kind (shape-table, frame-table, earthquake, bench)
        path (str): optional JSON config file
        **overrides: CLI flag values

    Returns:
        ExperimentConfig: validated config
    """
    file_values = read_config_file(path) if path else {}
    file_kind = file_values.get("kind")
    if file_kind and file_kind != kind:
        raise ConfigError([f"config kind '{file_kind}' does not match subcommand kind '{kind}'"])
    return build_config(kind, file_values, overrides)
