import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from windcast.configuration.monitor import get_logger
from windcast.models.mod_metrics import MetricReport
from windcast.models.mod_report import ERROR_METRICS, RADAR_AXES, RadarChart, RadarEntry
from windcast.validators.val_errors import DataError, UsageError

logger = get_logger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
SVG_SIZE = 480
RADAR_RADIUS = 170
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")

MetricRow = Tuple[str, MetricReport]


class _SortedElement(ET.Element):
    """Element whose attributes serialize in sorted order."""

    def items(self):
        return sorted(super().items())


def _fmt(value: float, precision: int = 6) -> str:
    text = f"{value:.{precision}f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


class ReportService:
    @staticmethod
    def normalize_for_radar(
        rows: Sequence[MetricRow], axes: Sequence[str] = RADAR_AXES, title: str = ""
    ) -> RadarChart:
        """
        Min-max normalize each metric across rows so that larger is better on
        every axis: error metrics are inverted, R2 is taken as is. Rows with
        identical metric vectors collapse into one entry with a merged label.
        An axis that is constant, or undefined for some row, is drawn at 0.5
        and flagged.
        """
        if len(rows) < 2:
            raise DataError("a radar chart needs at least 2 rows", code="insufficient_data")

        merged: Dict[Tuple[Optional[float], ...], List[str]] = {}
        for label, report in rows:
            key = tuple(report.metric(axis) for axis in axes)
            merged.setdefault(key, []).append(label)
        vectors = list(merged)

        columns: List[List[float]] = []
        flagged: List[str] = []
        for position, axis in enumerate(axes):
            raw = [vector[position] for vector in vectors]
            if any(value is None for value in raw):
                flagged.append(axis)
                columns.append([0.5] * len(raw))
                continue
            low, high = min(raw), max(raw)
            if high == low:
                flagged.append(axis)
                columns.append([0.5] * len(raw))
                continue
            scaled = [(value - low) / (high - low) for value in raw]
            if axis.upper() in ERROR_METRICS:
                scaled = [1.0 - value for value in scaled]
            columns.append(scaled)
        if flagged:
            logger.warning("Radar axes drawn at 0.5: %s", ", ".join(flagged))

        entries = tuple(
            RadarEntry(label="+".join(merged[vector]), values=tuple(column[i] for column in columns))
            for i, vector in enumerate(vectors)
        )
        return RadarChart(title=title, axes=tuple(axes), entries=entries, flagged_axes=tuple(flagged))

    @staticmethod
    def _point(axis: int, axis_count: int, radius: float) -> Tuple[float, float]:
        angle = -math.pi / 2 + 2 * math.pi * axis / axis_count
        center = SVG_SIZE / 2
        return center + radius * math.cos(angle), center + radius * math.sin(angle)

    @staticmethod
    def render_svg(chart: RadarChart, precision: int = 6) -> str:
        """Standalone SVG 1.1 text; identical charts render to identical bytes."""
        if not chart.entries:
            raise DataError("cannot render a radar chart without entries", code="empty_chart")
        count = len(chart.axes)
        root = _SortedElement(
            "svg",
            {
                "xmlns": SVG_NS,
                "version": "1.1",
                "width": str(SVG_SIZE),
                "height": str(SVG_SIZE + 20 * len(chart.entries)),
            },
        )
        if chart.title:
            title = _SortedElement("title", {})
            title.text = chart.title
            root.append(title)

        grid = _SortedElement("g", {"class": "grid", "stroke": "#cccccc", "fill": "none"})
        root.append(grid)
        for level in (0.25, 0.5, 0.75, 1.0):
            ring = " ".join(
                f"{_fmt(x, precision)},{_fmt(y, precision)}"
                for x, y in (ReportService._point(i, count, RADAR_RADIUS * level) for i in range(count))
            )
            grid.append(_SortedElement("polygon", {"points": ring}))

        spokes = _SortedElement("g", {"class": "spokes", "stroke": "#888888"})
        root.append(spokes)
        center = _fmt(SVG_SIZE / 2, precision)
        for i, axis in enumerate(chart.axes):
            x, y = ReportService._point(i, count, RADAR_RADIUS)
            spokes.append(
                _SortedElement("line", {"x1": center, "y1": center, "x2": _fmt(x, precision), "y2": _fmt(y, precision)})
            )
            lx, ly = ReportService._point(i, count, RADAR_RADIUS + 18)
            label = _SortedElement(
                "text", {"x": _fmt(lx, precision), "y": _fmt(ly, precision), "text-anchor": "middle", "font-size": "12"}
            )
            label.text = f"{axis}*" if axis in chart.flagged_axes else axis
            root.append(label)

        polygons = _SortedElement("g", {"class": "entries", "fill-opacity": "0.15", "stroke-width": "2"})
        root.append(polygons)
        for index, entry in enumerate(chart.entries):
            color = PALETTE[index % len(PALETTE)]
            points = " ".join(
                f"{_fmt(x, precision)},{_fmt(y, precision)}"
                for x, y in (ReportService._point(i, count, RADAR_RADIUS * v) for i, v in enumerate(entry.values))
            )
            polygons.append(_SortedElement("polygon", {"points": points, "stroke": color, "fill": color}))
            legend = _SortedElement(
                "text", {"x": "10", "y": str(SVG_SIZE + 20 * index + 10), "fill": color, "font-size": "12"}
            )
            legend.text = entry.label
            root.append(legend)

        return ET.tostring(root, encoding="unicode", short_empty_elements=True) + "\n"

    @staticmethod
    def emit_svg(chart: RadarChart, path: Union[str, Path], precision: int = 6) -> Path:
        svg = ReportService.render_svg(chart, precision)
        path = Path(path)
        try:
            path.write_text(svg, encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot write {path}: {exc.strerror}", code="unwritable_output") from exc
        return path

    @staticmethod
    def format_table(frame: pd.DataFrame, precision: int = 6) -> str:
        """Aligned plain-text table for terminal output."""
        return frame.to_string(index=False, float_format=lambda v: f"{v:.{precision}f}", na_rep="-")
