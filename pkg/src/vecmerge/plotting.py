"""Figure rendering for report tables.

Charts are drawn with matplotlib's object-oriented API on an Agg canvas, so
rendering works headless and never touches the interactive backend state.
"""

from __future__ import annotations

import logging

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .errors import DataError

logger = logging.getLogger(__name__)

BAR_COLOR = "#4878a8"
HIGHLIGHT_COLOR = "#b0563c"


def _new_axes(width: float, height: float):
    figure = Figure(figsize=(width, height), dpi=150)
    FigureCanvasAgg(figure)
    axes = figure.subplots()
    axes.grid(True, axis="x", alpha=0.3)
    axes.set_axisbelow(True)
    return figure, axes


def save_accuracy_figure(
    rows, path, title: str, highlight: str | None = None, label: str = "variant"
) -> None:
    """Render (variant, split, accuracy) rows as a horizontal bar chart.

    Bars are named by the ``variant`` column, or by ``split`` when
    ``label="split"`` (useful for per-category breakdowns of one model).  The
    bar named by ``highlight`` is drawn in a contrasting color.  Bars appear
    top to bottom in row order.
    """
    rows = list(rows)
    if not rows:
        raise DataError("nothing to plot: the report has no rows")
    if label not in ("variant", "split"):
        raise DataError(f"label must be 'variant' or 'split', got {label!r}")
    column = 0 if label == "variant" else 1
    names = [row[column] for row in rows]
    values = [float(accuracy) for _, _, accuracy in rows]
    figure, axes = _new_axes(6.4, 1.0 + 0.42 * len(rows))
    positions = range(len(rows) - 1, -1, -1)
    colors = [
        HIGHLIGHT_COLOR if name == highlight else BAR_COLOR for name in names
    ]
    axes.barh(list(positions), values, color=colors, height=0.62)
    axes.set_yticks(list(positions))
    axes.set_yticklabels(names, fontsize=9)
    axes.set_xlim(0.0, 1.0)
    axes.set_xlabel("accuracy", fontsize=9)
    axes.set_title(title, fontsize=10)
    for position, value in zip(positions, values):
        axes.text(
            min(value + 0.015, 0.985),
            position,
            f"{value:.4f}",
            va="center",
            ha="left",
            fontsize=8,
        )
    figure.tight_layout()
    figure.savefig(path, format="png")
    logger.info("wrote figure %s", path)
