"""
Helper utility functions for the PFM experiment runner
Formatting for report tables, output filenames, JSON-safe conversion and the
ordered worker pool used by replicate loops.
"""

import math
from multiprocessing import Pool

import numpy as np


def format_estimate(mean, sd=None, digits=4):
    """
    Format a summary statistic the way the report tables show it

    Args:
        mean (float): point value
        sd (float): optional spread shown in parentheses
        digits (int): decimals

    Returns:
        str: e.g. "0.0119 (0.0052)"; "n/a" for missing values
    """
    if mean is None or (isinstance(mean, float) and math.isnan(mean)):
        return "n/a"
    text = f"{mean:.{digits}f}"
    if sd is not None and not (isinstance(sd, float) and math.isnan(sd)):
        text += f" ({sd:.{digits}f})"
    return text


def truncate_text(text, max_length=100, suffix="..."):
    """
    Truncate text to maximum length

    Args:
        text (str): Text to truncate
        max_length (int): Maximum length
        suffix (str): Suffix to add if truncated

    Returns:
        str: Truncated text
    """
    if not text:
        return ""
    if len(text) <= max_length:
        return text
    return text[: max_length - len(suffix)].strip() + suffix


def generate_filename(name, extension):
    """
    Generate an output filename from a report name

    Args:
        name (str): report name
        extension (str): file extension without the dot

    Returns:
        str: sanitized filename
    """
    filename = "".join(c if c.isalnum() or c in " -_" else "" for c in name)
    filename = "_".join(filename.split()) or "report"
    return f"{filename}.{extension}"


def to_builtin(value):
    """Recursively convert numpy scalars / arrays to JSON-serializable builtins"""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    return value


def run_indexed(fn, items, workers=1):
    """
    Map fn over items, in order, optionally on a process pool

    Args:
        fn: picklable callable (module-level function or functools.partial)
        items (list): arguments, one per task
        workers (int): pool size; 1 runs serially in-process

    Returns:
        list: results in the order of items regardless of completion order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with Pool(processes=min(workers, len(items))) as pool:
        return pool.map(fn, items)
