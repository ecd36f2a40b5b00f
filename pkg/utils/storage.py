"""
Report Storage Utilities for the PFM experiment runner
Keeps experiment reports by name and moves them to and from one
schema-versioned JSON document
"""

import json
import logging
from typing import Dict, List, Optional

from utils.config import SCHEMA_VERSION
from utils.errors import InvalidInput, ParseError
from utils.validators import validate_report_payload

logger = logging.getLogger(__name__)


class ReportStore:
    """Manages named experiment reports (JSON payloads)"""

    def __init__(self):
        """Initialize an empty store"""
        self._reports: Dict[str, Dict] = {}

    def save_report(self, payload: Dict) -> None:
        """
        Save a report payload, replacing any report with the same name

        Args:
            payload: report document as produced by ExperimentReport.to_payload()
        """
        errors = validate_report_payload(payload)
        if errors:
            raise InvalidInput(f"report '{payload.get('name', '?')}' is invalid: " + "; ".join(errors))
        if payload["name"] in self._reports:
            logger.info("replacing stored report '%s'", payload["name"])
        self._reports[payload["name"]] = payload

    def get_all_reports(self) -> List[Dict]:
        """Get all reports in name order"""
        return [self._reports[name] for name in sorted(self._reports)]

    def get_report(self, name: str) -> Optional[Dict]:
        """
        Get a specific report by name

        Args:
            name: report name

        Returns:
            Report payload or None
        """
        return self._reports.get(name)

    def delete_report(self, name: str) -> bool:
        """Delete a report; returns False if it was not stored"""
        return self._reports.pop(name, None) is not None

    def export_all_data(self) -> str:
        """
        Export all reports as one JSON string

        Returns:
            JSON string with sorted keys (no timestamps, so equal reports give equal bytes)
        """
        data = {"schema_version": SCHEMA_VERSION, "reports": self.get_all_reports()}
        return json.dumps(data, indent=2, sort_keys=True)

    def import_data(self, json_str: str) -> int:
        """
        Import reports from a JSON string produced by export_all_data

        Args:
            json_str: JSON string to import

        Returns:
            int: number of reports imported
        """
        try:
            data = json.loads(json_str)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno) from e
        if not isinstance(data, dict) or "reports" not in data:
            raise InvalidInput("document has no 'reports' list")
        if data.get("schema_version") != SCHEMA_VERSION:
            raise InvalidInput(f"unsupported schema version {data.get('schema_version')!r}; expected {SCHEMA_VERSION}")
        for payload in data["reports"]:
            self.save_report(payload)
        return len(data["reports"])

    def clear_all_data(self) -> None:
        """Clear all stored reports"""
        self._reports.clear()
