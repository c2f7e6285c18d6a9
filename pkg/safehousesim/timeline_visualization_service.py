"""Timeline figures of a scenario run."""

import logging
from pathlib import Path
from typing import List, Sequence

import numpy as np
from matplotlib.figure import Figure

from safehousesim.amounts import USD
from safehousesim.harness import TimelinePoint

logger = logging.getLogger(__name__)

STATUS_COLORS = {
    "awaiting_counter_deposit": "#f6d365",
    "locked": "#e57373",
}

SUPPORTED_FORMATS = ["png", "pdf", "jpg", "jpeg", "svg"]


class TimelineVisualizationService:
    """Plots withdrawn value, counter deposits and the running extraction bound."""

    def __init__(self, figsize=(12, 6), dpi: int = 100):
        self.figsize = figsize
        self.dpi = dpi

    @staticmethod
    def _status_spans(points: Sequence[TimelinePoint]) -> List[tuple]:
        """Merge consecutive points of the same non-open status into (start, end, status)."""
        spans: List[tuple] = []
        for i, point in enumerate(points):
            status = point.status.split(":")[0]
            if status not in STATUS_COLORS:
                continue
            if spans and spans[-1][2] == status and spans[-1][1] == i - 1:
                spans[-1] = (spans[-1][0], i, status)
            else:
                spans.append((i, i, status))
        return spans

    def create_figure(self, timeline: Sequence[TimelinePoint], title: str = "") -> Figure:
        """Create the timeline figure.

        Args:
            timeline: One point per scenario event
            title: Figure title, typically the scenario name

        Returns:
            Matplotlib Figure; a placeholder message when the timeline is empty
        """
        fig = Figure(figsize=self.figsize, dpi=self.dpi)
        ax = fig.add_subplot(111)

        if not timeline:
            ax.text(
                0.5,
                0.5,
                "No events",
                ha="center",
                va="center",
                transform=ax.transAxes,
                fontsize=12,
            )
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_frame_on(False)
            return fig

        x = np.arange(len(timeline))
        extracted = np.array([p.extracted for p in timeline], dtype=float) / USD
        deposits = np.array([p.counter_deposits for p in timeline], dtype=float) / USD
        bound = np.array([p.bound for p in timeline], dtype=float) / USD
        net = extracted - deposits

        for start, end, status in self._status_spans(timeline):
            ax.axvspan(start - 0.5, end + 0.5, color=STATUS_COLORS[status], alpha=0.3, lw=0)

        ax.step(x, extracted, where="post", label="Withdrawn", color="#1f77b4")
        ax.step(x, deposits, where="post", label="Counter deposits", color="#2ca02c")
        ax.plot(x, net, marker="o", label="Net extracted", color="#000000")
        ax.plot(x, bound, linestyle="--", label="Extraction bound", color="#d62728")

        ax.set_xticks(x)
        ax.set_xticklabels([str(p.block) for p in timeline], rotation=90, fontsize=7)
        ax.set_xlabel("Block of event")
        ax.set_ylabel("USD")
        ax.set_title(title or "Safe-house timeline")
        ax.legend(loc="upper left")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        return fig

    def save_figure(self, fig: Figure, output_path: str) -> str:
        """Save a figure, choosing the format from the file suffix (png if unknown).

        Returns:
            The path actually written
        """
        output_format = Path(output_path).suffix.lower().lstrip(".")
        if output_format not in SUPPORTED_FORMATS:
            output_format = "png"
            output_path = str(Path(output_path).with_suffix(".png"))
        fig.savefig(
            output_path, format=output_format, dpi=150, bbox_inches="tight", facecolor="white"
        )
        logger.info(f"Saved timeline to {output_path}")
        return output_path
