"""
Seismic moment tensors
CSV ingestion and emission, region filtering, dataset edits (drop / duplicate
rows) and extraction of the T, B, P axial frame of each event.

CSV layout (UTF-8, '.' decimal separator, header required):

    event_id,m11,m22,m33,m12,m13,m23,region

m11..m23 are the six independent entries of the symmetric 3 x 3 tensor;
region may be empty.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from components.proj_stiefel import ProjStiefelPoint
from components.spectral import sym_eig
from utils.errors import DegenerateSpectrum, InvalidInput, ParseError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("event_id", "m11", "m22", "m33", "m12", "m13", "m23", "region")
ENTRY_COLUMNS = CSV_COLUMNS[1:7]
TBP_LABELS = ("T", "B", "P")
TRACE_WARN_RATIO = 0.05
EIGENGAP_FLOOR = 1e-10


@dataclass(frozen=True)
class MomentTensorRecord:
    """One event: id, the six tensor entries and an optional region label"""

    event_id: str
    entries: tuple
    region: Optional[str] = None

    @classmethod
    def from_matrix(cls, event_id, M, region=None):
        M = np.asarray(M, dtype=float)
        entries = (M[0, 0], M[1, 1], M[2, 2], M[0, 1], M[0, 2], M[1, 2])
        return cls(str(event_id), tuple(float(v) for v in entries), region)

    @property
    def matrix(self) -> np.ndarray:
        m11, m22, m33, m12, m13, m23 = self.entries
        return np.array([[m11, m12, m13], [m12, m22, m23], [m13, m23, m33]])

    @property
    def trace(self) -> float:
        return float(self.entries[0] + self.entries[1] + self.entries[2])

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order"""
        return sym_eig(self.matrix).eigenvalues


def _parse_float(text, line, column, name):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"{name} is not a number: {text!r}", line, column) from None
    if not np.isfinite(value):
        raise ParseError(f"{name} is not finite: {text!r}", line, column)
    return value


def ingest_moment_tensors(path) -> List[MomentTensorRecord]:
    """
    Read moment tensors from a CSV file

    Args:
        path (str): CSV file with header event_id,m11,m22,m33,m12,m13,m23,region

    Returns:
        list: MomentTensorRecords in file order

    Raises:
        ParseError: missing columns or non-numeric / non-finite entries, with the
            1-based line and column of the offending cell
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise ParseError("file is empty; a header row is required", 1, 1) from None
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}", 0, 0) from e

    header = list(frame.columns)
    for position, name in enumerate(CSV_COLUMNS[:7], start=1):
        if name not in header:
            raise ParseError(f"missing column '{name}'", 1, position)

    records = []
    for row_number, row in enumerate(frame.itertuples(index=False), start=2):
        values = row._asdict()
        event_id = values["event_id"].strip()
        if not event_id:
            raise ParseError("event_id is empty", row_number, header.index("event_id") + 1)
        entries = tuple(
            _parse_float(values[name], row_number, header.index(name) + 1, name) for name in ENTRY_COLUMNS
        )
        region = values.get("region", "").strip() or None
        record = MomentTensorRecord(event_id, entries, region)
        scale = np.linalg.norm(record.matrix)
        if abs(record.trace) > TRACE_WARN_RATIO * scale:
            logger.warning("event %s (line %d): trace %.3g exceeds 5%% of the Frobenius norm", event_id, row_number, record.trace)
        records.append(record)
    logger.info("ingested %d moment tensors from %s", len(records), path)
    return records


def write_moment_tensors(records: Iterable[MomentTensorRecord], path) -> None:
    """Write records in the ingestion CSV layout; floats use shortest round-trip repr"""
    rows = [
        [r.event_id] + [repr(float(v)) for v in r.entries] + [r.region or ""]
        for r in records
    ]
    pd.DataFrame(rows, columns=list(CSV_COLUMNS)).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def filter_region(records: List[MomentTensorRecord], region=None) -> List[MomentTensorRecord]:
    """Records of one region (all records when region is None)"""
    if region is None:
        selected = list(records)
    else:
        selected = [r for r in records if r.region == str(region)]
    if not selected:
        raise InvalidInput(f"no moment tensors for region {region!r}")
    return selected


def edit_dataset(records: List, drop_indices=(), duplicate_indices: Optional[Dict] = None) -> List:
    """
    Apply the dataset edits used for the modified earthquake datasets

    Args:
        records (list): region records, indexed from 0
        drop_indices: rows removed
        duplicate_indices (dict): row index -> number of extra copies appended

    Returns:
        list: kept rows in original order followed by duplicates in index order
    """
    duplicate_indices = {int(k): int(v) for k, v in (duplicate_indices or {}).items()}
    for idx in list(drop_indices) + list(duplicate_indices):
        if not 0 <= int(idx) < len(records):
            raise InvalidInput(f"row index {idx} out of range for {len(records)} records")
    dropped = {int(i) for i in drop_indices}
    edited = [r for i, r in enumerate(records) if i not in dropped]
    for idx in sorted(duplicate_indices):
        edited.extend([records[idx]] * duplicate_indices[idx])
    return edited


def extract_tbp_frame(record) -> ProjStiefelPoint:
    """
    T, B, P axes of a moment tensor

    Eigenvectors ordered by descending eigenvalue give the tension (T),
    null (B) and pressure (P) axes; signs are canonicalized.

    Args:
        record: MomentTensorRecord or symmetric 3 x 3 matrix

    Returns:
        ProjStiefelPoint: canonical frame labelled (T, B, P)

    Raises:
        DegenerateSpectrum: two eigenvalues closer than 1e-10 (relative)
    """
    M = record.matrix if isinstance(record, MomentTensorRecord) else np.asarray(record, dtype=float)
    eig = sym_eig(M)
    scale = max(1.0, float(np.abs(eig.eigenvalues).max()))
    gaps = -np.diff(eig.eigenvalues)
    if np.any(gaps <= EIGENGAP_FLOOR * scale):
        event = getattr(record, "event_id", "matrix")
        raise DegenerateSpectrum(f"{event}: repeated eigenvalue, T/B/P axes undefined (gaps {gaps})")
    return ProjStiefelPoint.from_matrix(eig.eigenvectors, canonical=True, labels=TBP_LABELS)
