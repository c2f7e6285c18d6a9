"""
Tests for the main module.
"""

import json
import sys
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from safehousesim.main import (
    create_parser,
    list_available_scenarios,
    load_scenario,
    validate_scenario,
    verify_command,
)
from tests.test_scenario_loader import minimal_scenario

ORACLE_EXAMPLE = Path(__file__).parent.parent / "oracle.example.json"


def run_main(*args):
    with patch.object(sys, "argv", ["safehouse-sim", *args]):
        from safehousesim.main import main

        main()


class TestCreateParser:
    """Test cases for the argument parser."""

    def test_create_parser(self):
        """Test that parser is created successfully."""
        parser = create_parser()
        assert parser is not None

    def test_parser_help(self):
        """Test that parser can generate help text."""
        help_text = create_parser().format_help()
        assert "Safe-House simulator" in help_text

    def test_parse_run(self):
        """Test the run subcommand arguments."""
        args = create_parser().parse_args(["run", "rogue_manager", "--report", "out.json"])
        assert args.command == "run"
        assert args.scenario == "rogue_manager"
        assert args.report == "out.json"


class TestCommands:
    """Test cases for the command functions."""

    def test_list_scenarios(self, capsys):
        """Test listing the bundled scenarios."""
        list_available_scenarios()
        captured = capsys.readouterr()
        assert "Available Scenarios" in captured.out
        assert "rogue_manager" in captured.out
        assert "Events: 7" in captured.out

    def test_list_empty_directory(self, capsys):
        """Test listing a directory without scenarios."""
        with tempfile.TemporaryDirectory() as temp_dir:
            list_available_scenarios(temp_dir)
        assert "No scenarios found." in capsys.readouterr().out

    def test_validate_with_summary(self, capsys):
        """Test validation with summary output."""
        validate_scenario("whale_redemption", show_summary=True)
        captured = capsys.readouterr()
        assert "✓ Scenario validation successful!" in captured.out
        assert "Scenario Summary" in captured.out
        assert "investor_redeem: 5" in captured.out

    def test_load_invalid_file(self):
        """Test an invalid scenario file exits."""
        data = minimal_scenario()
        del data["world"]
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir, "invalid.json")
            path.write_text(json.dumps(data))
            with pytest.raises(SystemExit):
                load_scenario(str(path))

    def test_load_malformed_json(self):
        """Test a file that is not JSON exits."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir, "broken.json")
            path.write_text("{")
            with pytest.raises(SystemExit):
                load_scenario(str(path))

    def test_load_nonexistent(self):
        """Test an unknown scenario exits."""
        with pytest.raises(SystemExit):
            load_scenario("nonexistent_scenario")

    def test_verify_mismatch(self, capsys):
        """Test verify reports a differing expected report."""
        with tempfile.TemporaryDirectory() as temp_dir:
            expected = Path(temp_dir, "expected.json")
            expected.write_text("{}\n")
            assert not verify_command("rogue_manager", str(expected), None)
        assert "differs" in capsys.readouterr().out


class TestMainIntegration:
    """Integration tests for the main function."""

    def test_main_no_command(self, capsys):
        """Test main without a command prints help and exits."""
        with pytest.raises(SystemExit) as exc:
            run_main()
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().out

    def test_main_list_scenarios(self, capsys):
        """Test main with list-scenarios."""
        run_main("list-scenarios")
        assert "Available Scenarios" in capsys.readouterr().out

    def test_main_run_and_verify(self, capsys):
        """Test a written report verifies against a fresh run."""
        with tempfile.TemporaryDirectory() as temp_dir:
            report = Path(temp_dir, "report.json")
            run_main("run", "rogue_manager", "--report", str(report))
            captured = capsys.readouterr()
            assert "Final status: locked:window_expired at block 60" in captured.out
            assert "✓ Report saved to" in captured.out

            data = json.loads(report.read_text())
            assert data["scenario"] == "rogue_manager"
            assert data["totals"]["extracted"] == "100.00000000"

            run_main("verify", "rogue_manager", str(report))
            assert "matches" in capsys.readouterr().out

    def test_main_verify_mismatch_exits(self):
        """Test verify exits with an error when reports differ."""
        with tempfile.TemporaryDirectory() as temp_dir:
            report = Path(temp_dir, "report.json")
            run_main("run", "oracle_spike", "--report", str(report))
            with pytest.raises(SystemExit) as exc:
                run_main("verify", "rogue_manager", str(report))
            assert exc.value.code == 1

    def test_main_verify_missing_report(self):
        """Test verify exits when the expected report does not exist."""
        with pytest.raises(SystemExit):
            run_main("verify", "rogue_manager", "/nonexistent/report.json")

    def test_main_run_missing_scenario(self):
        """Test run exits for an unknown scenario."""
        with pytest.raises(SystemExit) as exc:
            run_main("run", "nonexistent_scenario")
        assert exc.value.code == 1

    def test_main_oracle(self, capsys):
        """Test the oracle prints its result as JSON."""
        run_main("oracle", str(ORACLE_EXAMPLE), "--depth", "3")
        result = json.loads(capsys.readouterr().out)
        assert len(result["path"]) <= 3
        assert float(result["max_net_extracted"]) <= float(result["bound"])

    def test_main_oracle_too_deep(self):
        """Test the oracle refuses oversized searches."""
        with pytest.raises(SystemExit):
            run_main("oracle", str(ORACLE_EXAMPLE), "--depth", "9")

    def test_main_plot(self, capsys):
        """Test plot writes a timeline image."""
        with tempfile.TemporaryDirectory() as temp_dir:
            output = Path(temp_dir, "timeline.png")
            run_main("plot", "replay_from_log", "-o", str(output))
            assert output.exists()
        assert "✓ Timeline saved to" in capsys.readouterr().out

    def test_main_export_log(self, capsys):
        """Test export-log writes one JSON object per call."""
        with tempfile.TemporaryDirectory() as temp_dir:
            output = Path(temp_dir, "log.jsonl")
            run_main("export-log", "replay_from_log", "-o", str(output))
            lines = output.read_text().splitlines()
            records = [json.loads(line) for line in lines]
        assert records[0]["call_name"] == "investor_deposit"
        assert [r["index"] for r in records] == list(range(len(records)))
        out = capsys.readouterr().out
        assert f"Public log ({len(records)} calls)" in out
        assert "Replayable passwords: 0 of" in out
