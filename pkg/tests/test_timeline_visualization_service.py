"""Tests for the timeline_visualization_service module."""

import tempfile
from pathlib import Path

from matplotlib.figure import Figure

from safehousesim.amounts import USD
from safehousesim.harness import ScenarioRunner, TimelinePoint
from safehousesim.scenario_catalog import ScenarioCatalog
from safehousesim.timeline_visualization_service import TimelineVisualizationService


def point(index, status="open", extracted=0):
    return TimelinePoint(index, index, extracted, 0, 100 * USD, status)


class TestStatusSpans:
    """Test cases for grouping statuses into shaded spans."""

    def test_open_only(self):
        """Test an always-open timeline has no spans."""
        points = [point(i) for i in range(3)]
        assert TimelineVisualizationService._status_spans(points) == []

    def test_merges_consecutive(self):
        """Test consecutive points of one status merge and reasons are ignored."""
        points = [
            point(0),
            point(1, "awaiting_counter_deposit"),
            point(2, "awaiting_counter_deposit"),
            point(3, "locked:window_expired"),
            point(4, "locked:window_expired"),
        ]
        assert TimelineVisualizationService._status_spans(points) == [
            (1, 2, "awaiting_counter_deposit"),
            (3, 4, "locked"),
        ]

    def test_separate_spans(self):
        """Test an open point between two windows splits them."""
        points = [
            point(0, "awaiting_counter_deposit"),
            point(1),
            point(2, "awaiting_counter_deposit"),
        ]
        spans = TimelineVisualizationService._status_spans(points)
        assert spans == [(0, 0, "awaiting_counter_deposit"), (2, 2, "awaiting_counter_deposit")]


class TestTimelineVisualizationService:
    """Test cases for the TimelineVisualizationService class."""

    def test_empty_timeline(self):
        """Test an empty timeline renders a placeholder."""
        fig = TimelineVisualizationService().create_figure([])
        assert isinstance(fig, Figure)
        texts = [t.get_text() for t in fig.axes[0].texts]
        assert "No events" in texts

    def test_scenario_figure(self):
        """Test a scenario timeline renders with its title and four series."""
        scenario = ScenarioCatalog().get_scenario("rogue_manager")
        runner = ScenarioRunner(scenario).run()
        fig = TimelineVisualizationService().create_figure(runner.timeline, title="rogue")
        ax = fig.axes[0]
        assert ax.get_title() == "rogue"
        assert len(ax.get_lines()) == 4
        assert len(ax.get_xticks()) == len(runner.timeline)

    def test_save_png_and_svg(self):
        """Test figures are saved in the format of the suffix."""
        service = TimelineVisualizationService(figsize=(4, 3))
        fig = service.create_figure([point(0), point(1, extracted=50 * USD)])
        with tempfile.TemporaryDirectory() as temp_dir:
            png = service.save_figure(fig, str(Path(temp_dir) / "timeline.png"))
            svg = service.save_figure(fig, str(Path(temp_dir) / "timeline.svg"))
            assert Path(png).read_bytes().startswith(b"\x89PNG")
            assert b"<svg" in Path(svg).read_bytes()

    def test_save_unknown_suffix(self):
        """Test an unknown suffix falls back to png."""
        service = TimelineVisualizationService(figsize=(4, 3))
        fig = service.create_figure([point(0)])
        with tempfile.TemporaryDirectory() as temp_dir:
            saved = service.save_figure(fig, str(Path(temp_dir) / "timeline.xyz"))
            assert saved.endswith("timeline.png")
            assert Path(saved).exists()
