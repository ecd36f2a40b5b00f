"""
Input validation functions for the PFM library
Numeric precondition checks used by the components, plus the config and
report validators built on the published JSON schemas in schema/.
"""

import json
import os
from functools import lru_cache

import numpy as np
from jsonschema import Draft202012Validator

from utils.errors import InvalidInput

SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "schema")


@lru_cache(maxsize=None)
def load_schema(name):
    """
    Read a published schema document

    Args:
        name (str): schema stem, e.g. "experiment_config" or "report"

    Returns:
        dict: decoded schema
    """
    with open(os.path.join(SCHEMA_DIR, f"{name}.schema.json"), encoding="utf-8") as f:
        return json.load(f)


@lru_cache(maxsize=None)
def schema_validator(name) -> Draft202012Validator:
    """Draft 2020-12 validator for a published schema, checked once per process"""
    schema = load_schema(name)
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


KNOWN_FORMATS = tuple(load_schema("experiment_config")["properties"]["output"]["properties"]["formats"]["items"]["enum"])


def require_finite(array, name="input"):
    """
    Reject arrays containing NaN or infinities

    Args:
        array: array-like to check
        name (str): label used in the error message

    Returns:
        np.ndarray: the input as an array
    """
    values = np.asarray(array)
    if values.size and not np.all(np.isfinite(values)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return values


def require_square(array, name="input"):
    """Reject non-square 2-d arrays"""
    values = np.asarray(array)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix, got shape {values.shape}")
    return values


def require_symmetric(array, tol=1e-10, name="input"):
    """
    Check symmetry within a Frobenius tolerance and return the symmetrized matrix

    Args:
        array: square real matrix
        tol (float): allowed Frobenius norm of A - A^T, relative to max(1, |A|)
        name (str): label used in the error message

    Returns:
        np.ndarray: (A + A^T) / 2
    """
    values = require_square(require_finite(array, name), name)
    if np.iscomplexobj(values):
        raise InvalidInput(f"{name} must be real")
    scale = max(1.0, float(np.linalg.norm(values)))
    if np.linalg.norm(values - values.T) > tol * scale:
        raise InvalidInput(f"{name} is not symmetric within {tol}")
    return 0.5 * (values + values.T)


def require_hermitian(array, tol=1e-10, name="input"):
    """Check Hermitian structure and return (A + A*) / 2"""
    values = require_square(require_finite(array, name), name).astype(complex)
    scale = max(1.0, float(np.linalg.norm(values)))
    if np.linalg.norm(values - values.conj().T) > tol * scale:
        raise InvalidInput(f"{name} is not Hermitian within {tol}")
    return 0.5 * (values + values.conj().T)


def require_skew(array, tol=1e-10, name="input"):
    """Check skew-symmetry and return (V - V^T) / 2"""
    values = require_square(require_finite(array, name), name)
    scale = max(1.0, float(np.linalg.norm(values)))
    if np.linalg.norm(values + values.T) > tol * scale:
        raise InvalidInput(f"{name} is not skew-symmetric within {tol}")
    return 0.5 * (values - values.T)


def require_unit(vector, tol=1e-10, name="vector"):
    """Reject vectors whose Euclidean norm differs from 1 by more than tol"""
    values = require_finite(vector, name).reshape(-1)
    if abs(np.linalg.norm(values) - 1.0) > tol:
        raise InvalidInput(f"{name} must have unit norm")
    return values


def validate_required_field(value, field_name):
    """
    Validate that a required field is present and not empty

    Args:
        value: Value to check
        field_name (str): Name of the field for error message

    Returns:
        tuple: (is_valid, error_message)
    """
    if value is None or (isinstance(value, str) and not value.strip()):
        return False, f"{field_name} is required"
    return True, ""


def validate_int_range(value, field_name, minimum=None, maximum=None):
    """
    Validate an integer field against optional bounds

    Returns:
        tuple: (is_valid, error_message)
    """
    if isinstance(value, bool) or not isinstance(value, int):
        return False, f"{field_name} must be an integer"
    if minimum is not None and value < minimum:
        return False, f"{field_name} must be >= {minimum}"
    if maximum is not None and value > maximum:
        return False, f"{field_name} must be <= {maximum}"
    return True, ""


def _location(path):
    """Dotted location of a schema error, e.g. data.variants.cont.drop_indices[0]"""
    text = ""
    for part in path:
        text += f"[{part}]" if isinstance(part, int) else (f".{part}" if text else str(part))
    return text


def _describe(error):
    location = _location(error.absolute_path)
    if "propertyNames" in error.schema_path:
        return f"{location} keys must be row indices: {error.message}"
    return f"{location}: {error.message}" if location else error.message


def schema_errors(name, instance):
    """
    Every violation of a published schema, as readable messages

    Args:
        name (str): schema stem
        instance: decoded JSON document

    Returns:
        list: messages ordered by location (empty when valid)
    """
    errors = sorted(schema_validator(name).iter_errors(instance), key=lambda e: (_location(e.absolute_path), e.message))
    return [_describe(e) for e in errors]


def _collect(errors, check):
    ok, message = check
    if not ok:
        errors.append(message)


def validate_experiment_config(raw):
    """
    Validate a merged experiment config

    Structural rules (types, ranges, enums, kind-scoped required keys and
    estimator sets) come from schema/experiment_config.schema.json; the checks
    below relate one field to another, which the schema cannot express.

    Args:
        raw (dict): merged key-value tree

    Returns:
        list: error messages (empty when valid)
    """
    errors = schema_errors("experiment_config", raw)
    if not isinstance(raw, dict) or raw.get("kind") not in ("shape-table", "frame-table"):
        return errors

    n = raw.get("n")
    if isinstance(n, int) and isinstance(raw.get("contamination"), list):
        for i, n1 in enumerate(raw["contamination"]):
            if isinstance(n1, int) and n1 > n:
                _collect(errors, validate_int_range(n1, f"contamination[{i}]", maximum=n))

    distribution = raw.get("distribution")
    if raw["kind"] == "shape-table" and isinstance(distribution, dict):
        kappa = distribution.get("kappa") if isinstance(distribution.get("kappa"), dict) else {}
        for s in distribution.get("shapes") or []:
            _collect(errors, validate_required_field(kappa.get(str(s)), f"distribution.kappa.{s}"))
        subsets = distribution.get("mom_subsets", 7)
        if "MoM" in (raw.get("estimators") or []) and isinstance(n, int) and isinstance(subsets, int):
            _collect(errors, validate_int_range(subsets, "distribution.mom_subsets", maximum=n))
    return errors


def validate_report_payload(payload):
    """
    Validate a JSON report document against schema/report.schema.json

    Row keys must also equal the columns list.

    Args:
        payload (dict): decoded report

    Returns:
        list: error messages (empty when valid)
    """
    errors = schema_errors("report", payload)
    if errors or not isinstance(payload, dict):
        return errors
    columns = set(payload["columns"])
    for i, row in enumerate(payload["rows"]):
        if set(row) != columns:
            errors.append(f"rows[{i}] keys do not match columns")
    return errors
