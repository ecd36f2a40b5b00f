"""
Report Exporter for the PFM experiment runner
Writes experiment reports as CSV tables, schema-versioned JSON, SVG figures
and a PDF summary, and keeps a JSON archive of reports. Output bytes depend
only on the report contents; wall-clock timings go to separate _timing files.
"""

import json
import logging
import os
from datetime import datetime, timezone

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from fpdf import FPDF  # noqa: E402

from components.bootstrap import axial_log_map  # noqa: E402
from templates.report_template import ReportTemplate  # noqa: E402
from utils.errors import InvalidInput  # noqa: E402
from utils.helpers import format_estimate, generate_filename, to_builtin, truncate_text  # noqa: E402
from utils.storage import ReportStore  # noqa: E402
from utils.validators import KNOWN_FORMATS, validate_report_payload  # noqa: E402

logger = logging.getLogger(__name__)

FIXED_CREATION_DATE = datetime(2000, 1, 1, tzinfo=timezone.utc)
SVG_HASH_SALT = "pfm-report"


def sanitize_text(text):
    """
    Reduce text to Latin-1 so the PDF core fonts can render it

    Args:
        text (str): Input text

    Returns:
        str: Latin-1 compatible text
    """
    if text is None:
        return ""
    replacements = {"–": "-", "—": "--", "κ": "kappa", "±": "+/-"}
    text = str(text)
    for unicode_char, replacement in replacements.items():
        text = text.replace(unicode_char, replacement)
    return "".join(char if ord(char) < 256 else "?" for char in text)


# ---------------------------------------------------------------------------
# CSV / JSON
# ---------------------------------------------------------------------------


def write_csv(report, path):
    """Rows in template column order; an empty report gives a header-only file"""
    report.to_frame().to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path


def write_events_csv(report, path):
    events = report.extras.get("events", [])
    pd.DataFrame(events, columns=ReportTemplate.EVENT_COLUMNS).to_csv(
        path, index=False, float_format="%.10g", lineterminator="\n"
    )
    return path


def write_json(report, path):
    payload = report.to_payload()
    errors = validate_report_payload(payload)
    if errors:
        raise InvalidInput("report does not match its schema: " + "; ".join(errors))
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(payload, indent=2, sort_keys=True))
        f.write("\n")
    return path


def write_timing(report, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_builtin(report.timing), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


# ---------------------------------------------------------------------------
# SVG figures
# ---------------------------------------------------------------------------


def _shape_figure(report):
    errors = report.extras.get("errors", {})
    cells = list(errors)
    fig, axes = plt.subplots(1, max(1, len(cells)), figsize=(3.0 * max(1, len(cells)), 3.5), squeeze=False)
    for ax, cell in zip(axes[0], cells):
        names = list(errors[cell])
        data = [np.log(np.asarray(errors[cell][name])[np.asarray(errors[cell][name]) > 0]) for name in names]
        if any(d.size for d in data):
            parts = ax.boxplot([d if d.size else [np.nan] for d in data], patch_artist=True)
            for patch, name in zip(parts["boxes"], names):
                patch.set_facecolor(ReportTemplate.color_for(name))
        ax.set_xticks(range(1, len(names) + 1))
        ax.set_xticklabels(names, rotation=45, fontsize=7)
        ax.set_title(cell, fontsize=8)
    axes[0][0].set_ylabel("log angular error")
    return fig


def _frame_figure(report):
    frame = report.to_frame()
    cells = frame[["case", "outliers"]].drop_duplicates().values.tolist() if not frame.empty else []
    fig, axes = plt.subplots(1, max(1, len(cells)), figsize=(2.6 * max(1, len(cells)), 3.5), squeeze=False)
    for ax, (case, outliers) in zip(axes[0], cells):
        block = frame[(frame["case"] == case) & (frame["outliers"] == outliers)]
        for offset, (name, rows) in enumerate(block.groupby("estimator", sort=False)):
            x = np.arange(len(rows)) + 0.15 * offset
            ax.errorbar(x, rows["mean_error"], yerr=rows["sd_error"], fmt="o", label=name,
                        color=ReportTemplate.color_for(name), capsize=3)
            ax.set_xticks(np.arange(len(rows)))
            ax.set_xticklabels(rows["axis"], fontsize=7)
        ax.set_title(f"case {case}, {outliers} outliers", fontsize=8)
    axes[0][0].set_ylabel("angular error")
    axes[0][0].legend(fontsize=7)
    return fig


def _ellipse_boundary(ellipse, points=200):
    theta = np.linspace(0.0, 2.0 * np.pi, points)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    if ellipse.get("degenerate"):
        return float(ellipse["interval_radius"]) * circle
    L = np.linalg.cholesky(np.asarray(ellipse["covariance"], dtype=float))
    return np.sqrt(float(ellipse["radius2"])) * (L @ circle)


def _earthquake_figure(report):
    labels = ReportTemplate.AXIS_LABELS["earthquake"]
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.8), squeeze=False)
    ellipses = report.extras.get("ellipses", {})
    reference = next((cell for cell in ellipses if cell.endswith("/median") and ellipses[cell]), None)
    frame = report.to_frame()
    event_axes = np.asarray(report.extras.get("event_axes", []), dtype=float)

    for j, ax in enumerate(axes[0]):
        ax.set_title(f"{labels[j]} axis", fontsize=9)
        if reference is None:
            continue
        ellipse = ellipses[reference][j]
        center = np.asarray(ellipse["axis"], dtype=float)
        basis = np.asarray(ellipse["basis"], dtype=float)
        if event_axes.size:
            coords = np.array([axial_log_map(a, center, basis) for a in event_axes[:, j]])
            ax.scatter(coords[:, 0], coords[:, 1], s=10, color="#7f7f7f", label="events")
        boundary = _ellipse_boundary(ellipse)
        ax.plot(boundary[0], boundary[1], color=ReportTemplate.ELLIPSE_COLOR, lw=1)
        rows = frame[frame["axis"] == labels[j]]
        for _, row in rows.iterrows():
            v = axial_log_map(np.array([row["x"], row["y"], row["z"]], dtype=float), center, basis)
            marker = "s" if row["estimator"] == "mean" else "^"
            ax.scatter(v[0], v[1], marker=marker, s=28, color=ReportTemplate.color_for(row["estimator"]))
            ax.annotate(f"{row['estimator']}_{row['variant']}", (v[0], v[1]), fontsize=6)
        ax.set_aspect("equal", adjustable="datalim")
    return fig


def _bench_figure(report):
    frame = pd.DataFrame(report.timing.get("operations", []), columns=["operation", "n", "k", "median_seconds", "min_seconds"])
    fig, ax = plt.subplots(figsize=ReportTemplate.FIGURE_SIZE)
    for (operation, k), rows in frame.groupby(["operation", "k"], sort=False):
        ax.plot(rows["n"], rows["median_seconds"].astype(float), marker="o", label=f"{operation} (k={k})")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("median seconds")
    if not frame.empty:
        ax.legend(fontsize=6)
    return fig


FIGURES = {
    "shape-table": _shape_figure,
    "frame-table": _frame_figure,
    "earthquake": _earthquake_figure,
    "bench": _bench_figure,
}


def write_svg(report, path):
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig = FIGURES[report.kind](report)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# PDF summary
# ---------------------------------------------------------------------------


class ReportPDF(FPDF):
    """Custom PDF class for experiment summaries"""

    def __init__(self):
        super().__init__(orientation="L")
        margins = ReportTemplate.MARGINS
        self.set_auto_page_break(auto=True, margin=margins["bottom"])
        self.set_margins(left=margins["left"], top=margins["top"], right=margins["right"])
        self.set_creation_date(FIXED_CREATION_DATE)

    def footer(self):
        self.set_y(-12)
        self.set_font("helvetica", "", ReportTemplate.FONT_SIZES["meta"])
        self.set_text_color(*ReportTemplate.COLORS["meta"])
        self.cell(0, 5, f"page {self.page_no()}", align="C")

    def title_section(self, report):
        self.set_font("helvetica", "B", ReportTemplate.FONT_SIZES["title"])
        self.set_text_color(*ReportTemplate.COLORS["primary"])
        self.cell(0, 10, sanitize_text(f"{report.name} ({report.kind})"), new_x="LMARGIN", new_y="NEXT")
        self.set_font("helvetica", "", ReportTemplate.FONT_SIZES["meta"])
        self.set_text_color(*ReportTemplate.COLORS["meta"])
        config = report.config
        meta = f"seed {config.get('seed')} | replicates {config.get('replicates')} | failures {report.n_failed}"
        if report.dry_run:
            meta += " | dry run"
        self.cell(0, 5, sanitize_text(meta), new_x="LMARGIN", new_y="NEXT")
        self.ln(3)

    def section_title(self, title):
        self.set_font("helvetica", "B", ReportTemplate.FONT_SIZES["section_title"])
        self.set_text_color(*ReportTemplate.COLORS["primary"])
        self.cell(0, 6, sanitize_text(title.upper()), new_x="LMARGIN", new_y="NEXT")
        self.set_draw_color(*ReportTemplate.COLORS["rule"])
        self.line(self.l_margin, self.get_y(), self.w - self.r_margin, self.get_y())
        self.ln(2)

    def table(self, columns, rows):
        width = (self.w - self.l_margin - self.r_margin) / max(1, len(columns))
        self.set_font("helvetica", "B", ReportTemplate.FONT_SIZES["table_header"])
        self.set_text_color(*ReportTemplate.COLORS["text"])
        for column in columns:
            self.cell(width, 6, sanitize_text(truncate_text(column, 16)), border="B")
        self.ln()
        self.set_font("helvetica", "", ReportTemplate.FONT_SIZES["table_body"])
        for row in rows:
            for column in columns:
                self.cell(width, 5, sanitize_text(truncate_text(_cell_text(row.get(column)), 18)))
            self.ln()


def _cell_text(value):
    if isinstance(value, (float, np.floating)):
        return format_estimate(float(value), digits=ReportTemplate.FLOAT_DIGITS)
    return "" if value is None else str(value)


def write_pdf(report, path):
    pdf = ReportPDF()
    pdf.add_page()
    pdf.title_section(report)
    pdf.section_title("Results")
    pdf.table(report.columns, report.rows)
    if report.failures:
        pdf.ln(4)
        pdf.section_title("Failures")
        pdf.table(["cell", "replicate", "estimator", "error_type", "message"], report.failures)
    pdf.output(path)
    return path


WRITERS = {"csv": write_csv, "json": write_json, "svg": write_svg, "pdf": write_pdf}


def emit_outputs(report, out_dir, formats=("csv", "json")):
    """
    Write a report in the requested formats

    Args:
        report (ExperimentReport): report to write
        out_dir (str): output directory (created if missing)
        formats: subset of csv, json, svg, pdf

    Returns:
        list: paths written, in format order

    Raises:
        OSError: with the offending path when the directory or a file cannot be written
    """
    unknown = [fmt for fmt in formats if fmt not in KNOWN_FORMATS]
    if unknown:
        raise InvalidInput(f"unknown output formats {unknown}; expected {KNOWN_FORMATS}")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir}: {e}") from e

    written = []
    for fmt in dict.fromkeys(formats):
        stem = f"{report.name}_timing" if fmt == "svg" and report.kind in ReportTemplate.TIMING_FIGURES else report.name
        path = os.path.join(out_dir, generate_filename(stem, fmt))
        try:
            written.append(WRITERS[fmt](report, path))
            if fmt == "csv" and report.kind == "earthquake":
                written.append(write_events_csv(report, os.path.join(out_dir, generate_filename(f"{report.name}_events", "csv"))))
            if fmt == "json":
                written.append(write_timing(report, os.path.join(out_dir, generate_filename(f"{report.name}_timing", "json"))))
        except OSError as e:
            raise OSError(f"cannot write {path}: {e}") from e
        logger.info("wrote %s", path)
    return written


def archive_report(report, path):
    """
    Add a report to a JSON archive of reports, replacing one with the same name

    Args:
        report (ExperimentReport): report to store
        path (str): archive file; created when missing

    Returns:
        str: the archive path
    """
    store = ReportStore()
    if os.path.exists(path):
        with open(path, encoding="utf-8") as f:
            store.import_data(f.read())
    store.save_report(report.to_payload())
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(store.export_all_data())
        f.write("\n")
    logger.info("archived %s in %s (%d reports)", report.name, path, len(store.get_all_reports()))
    return path
