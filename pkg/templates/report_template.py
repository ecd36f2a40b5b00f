"""
Report Template
Column layouts, figure styling and PDF typography for experiment reports
"""


class ReportTemplate:
    """Table and figure layout shared by the CSV, SVG and PDF writers"""

    # Stable column order per scenario kind
    COLUMNS = {
        "shape-table": [
            "shape", "outliers", "estimator", "median_error", "sd_error", "mean_error",
            "successes", "failures", "nonconverged",
        ],
        "frame-table": [
            "case", "kappa", "outliers", "estimator", "axis", "mean_error", "sd_error",
            "median_error", "successes", "failures", "coverage",
        ],
        "earthquake": [
            "variant", "estimator", "n_events", "axis", "x", "y", "z", "se", "shift", "ellipse_area",
        ],
        "bench": [
            "operation", "n", "k", "repeats",
        ],
    }

    # Event-level table emitted alongside earthquake reports
    EVENT_COLUMNS = ["event_id", "region", "lambda1", "lambda2", "lambda3", "trace"]

    # Figure colours (hex, matplotlib)
    ESTIMATOR_COLORS = {
        "EMedian": "#1f77b4",
        "IMean": "#d62728",
        "IMedian": "#2ca02c",
        "MoM": "#ff7f0e",
        "mean": "#d62728",
        "median": "#1f77b4",
    }
    ELLIPSE_COLOR = "#d62728"
    # Kinds whose figure plots wall-clock timings; saved as <name>_timing.svg
    TIMING_FIGURES = {"bench"}
    AXIS_LABELS = {"frame-table": ("m1", "m2", "m3"), "earthquake": ("T", "B", "P")}

    # PDF colour scheme (RGB)
    COLORS = {
        "primary": (31, 119, 180),
        "text": (0, 0, 0),
        "meta": (100, 100, 100),
        "rule": (200, 200, 200),
    }

    FONT_SIZES = {
        "title": 16,
        "section_title": 12,
        "table_header": 8,
        "table_body": 8,
        "meta": 9,
    }

    MARGINS = {"top": 15, "bottom": 15, "left": 10, "right": 10}

    FIGURE_SIZE = (7.0, 4.5)
    FLOAT_DIGITS = 4

    @staticmethod
    def get_columns(kind):
        """Column order for a scenario kind"""
        return list(ReportTemplate.COLUMNS[kind])

    @staticmethod
    def color_for(estimator):
        return ReportTemplate.ESTIMATOR_COLORS.get(estimator, "#7f7f7f")
