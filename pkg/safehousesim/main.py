"""
Command-line entry point for the Safe-House simulator.

Runs bundled or user-supplied scenarios, verifies reports byte for byte,
and runs the exhaustive adversary search.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from safehousesim.errors import SafeHouseError, SchemaError
from safehousesim.harness import ScenarioRunner, adversary_loss_oracle, replay_attacker
from safehousesim.scenario_catalog import ScenarioCatalog
from safehousesim.scenario_loader import Scenario, ScenarioLoader
from safehousesim.timeline_visualization_service import TimelineVisualizationService

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser.

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        prog="safehouse-sim",
        description="Safe-House simulator - custody protocol scenarios and loss-bound checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run a bundled scenario and write its report
  safehouse-sim run rogue_manager --report rogue_manager.json

  # Check a run reproduces a stored report
  safehouse-sim verify rogue_manager rogue_manager.json

  # Exhaustive adversary search
  safehouse-sim oracle oracle.json --depth 5

  # List bundled scenarios
  safehouse-sim list-scenarios
        """,
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )
    parser.add_argument(
        "--scenarios-dir",
        type=str,
        help="Custom directory of scenario JSON files",
    )

    subparsers = parser.add_subparsers(dest="command")

    run = subparsers.add_parser("run", help="Run a scenario and print its summary")
    run.add_argument("scenario", help="Bundled scenario name or path to a scenario JSON file")
    run.add_argument("--report", type=str, help="Write the canonical report to this file")

    verify = subparsers.add_parser("verify", help="Check a run against an expected report")
    verify.add_argument("scenario", help="Bundled scenario name or path to a scenario JSON file")
    verify.add_argument("expected", help="Path to the expected report JSON")

    oracle = subparsers.add_parser("oracle", help="Exhaustive adversary search")
    oracle.add_argument("config", help="Path to the oracle config JSON")
    oracle.add_argument("--depth", type=int, help="Number of adversary actions (at most 8)")

    subparsers.add_parser("list-scenarios", help="List bundled scenarios and exit")

    validate = subparsers.add_parser("validate", help="Validate a scenario file")
    validate.add_argument("scenario", help="Bundled scenario name or path to a scenario JSON file")
    validate.add_argument("--summary", action="store_true", help="Show a summary of the scenario")

    plot = subparsers.add_parser("plot", help="Render the timeline of a run")
    plot.add_argument("scenario", help="Bundled scenario name or path to a scenario JSON file")
    plot.add_argument("-o", "--output", required=True, help="Output image (PNG, PDF, SVG)")

    export = subparsers.add_parser("export-log", help="Write the public log of a run as JSON lines")
    export.add_argument("scenario", help="Bundled scenario name or path to a scenario JSON file")
    export.add_argument("-o", "--output", required=True, help="Output JSON-lines file")

    return parser


def load_scenario(name_or_path: str, scenarios_dir: Optional[str] = None) -> Scenario:
    """Resolve a scenario or exit with an error."""
    try:
        return ScenarioCatalog(scenarios_dir=scenarios_dir).resolve(name_or_path)
    except FileNotFoundError as e:
        logger.error(str(e))
        sys.exit(1)
    except SchemaError as e:
        logger.error(f"Scenario validation failed: {e}")
        sys.exit(1)
    except json.JSONDecodeError as e:
        logger.error(f"Scenario is not valid JSON: {e}")
        sys.exit(1)


def list_available_scenarios(scenarios_dir: Optional[str] = None):
    catalog = ScenarioCatalog(scenarios_dir=scenarios_dir)
    scenarios = catalog.get_available_scenarios()
    if not scenarios:
        print("No scenarios found.")
        return

    print("\nAvailable Scenarios:")
    print("=" * 60)
    for scenario in scenarios:
        print(f"  • {scenario['name']}")
        if scenario["description"]:
            print(f"    {scenario['description']}")
        print(f"    Events: {scenario['event_count']}")
        print()


def validate_scenario(name_or_path: str, show_summary: bool, scenarios_dir: Optional[str] = None):
    print(f"\nValidating scenario: {name_or_path}")
    scenario = load_scenario(name_or_path, scenarios_dir)
    print("✓ Scenario validation successful!")

    if show_summary:
        summary = ScenarioLoader.get_summary(scenario)
        print("\nScenario Summary:")
        print("=" * 60)
        print(f"  Name: {summary['name']}")
        print(f"  Seed: {summary['seed']}")
        print(f"  Criterion mode: {summary['criterion_mode']}")
        print(f"  Owners: {summary['num_owners']} (threshold {summary['threshold']})")
        print(f"  Managers: {summary['num_managers']}")
        print(f"  Investors: {summary['num_investors']}")
        print(f"  Assets: {summary['num_assets']}")
        print(f"  Pools: {summary['num_pools']}")
        print(f"  Events: {summary['num_events']} (last block {summary['last_block']})")
        for event_type, count in summary["event_types"].items():
            print(f"    {event_type}: {count}")
        print()


def run_command(name_or_path: str, report_path: Optional[str], scenarios_dir: Optional[str]):
    scenario = load_scenario(name_or_path, scenarios_dir)
    runner = ScenarioRunner(scenario).run()
    report = runner.report()

    failed = sum(1 for outcome in report.outcomes if not outcome.success)
    print(f"\nScenario: {report.scenario} (seed {report.seed})")
    print("=" * 60)
    print(f"  Final status: {report.final_status} at block {report.final_block}")
    print(f"  Events: {len(report.outcomes)} ({failed} failed)")
    for key, value in report.totals.items():
        print(f"  {key.replace('_', ' ').capitalize()}: {value}")
    print(f"  Log: {report.log_length} calls, digest {report.log_digest}")

    if report_path:
        Path(report_path).write_bytes(report.to_json_bytes())
        print(f"✓ Report saved to: {report_path}")


def verify_command(name_or_path: str, expected_path: str, scenarios_dir: Optional[str]) -> bool:
    scenario = load_scenario(name_or_path, scenarios_dir)
    try:
        expected = Path(expected_path).read_bytes()
    except FileNotFoundError:
        logger.error(f"Expected report not found: {expected_path}")
        sys.exit(1)
    actual = ScenarioRunner(scenario).run().report().to_json_bytes()
    if actual == expected:
        print(f"✓ Report for '{scenario.name}' matches {expected_path}")
        return True
    print(f"✗ Report for '{scenario.name}' differs from {expected_path}")
    return False


def oracle_command(config_path: str, depth: Optional[int]):
    try:
        config = ScenarioLoader.load_oracle_config(config_path)
        result = adversary_loss_oracle(
            config.params, config.depth if depth is None else depth, config.grid
        )
    except FileNotFoundError as e:
        logger.error(str(e))
        sys.exit(1)
    except (SafeHouseError, ValueError) as e:
        logger.error(f"Adversary search failed: {e}")
        sys.exit(1)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))


def plot_command(name_or_path: str, output_path: str, scenarios_dir: Optional[str]):
    scenario = load_scenario(name_or_path, scenarios_dir)
    runner = ScenarioRunner(scenario).run()
    service = TimelineVisualizationService()
    fig = service.create_figure(runner.timeline, title=scenario.name)
    saved = service.save_figure(fig, output_path)
    print(f"✓ Timeline saved to: {saved}")


def export_log_command(name_or_path: str, output_path: str, scenarios_dir: Optional[str]):
    scenario = load_scenario(name_or_path, scenarios_dir)
    runner = ScenarioRunner(scenario).run()
    Path(output_path).write_text(runner.world.ledger.export_jsonl(), encoding="utf-8")
    replay = replay_attacker(runner.world.snapshot())
    print(f"✓ Public log ({len(runner.world.ledger.public_log())} calls) saved to: {output_path}")
    print(f"  Replayable passwords: {replay.succeeded} of {replay.attempted}")


def main():
    """Main entry point for the safehouse-sim command."""
    parser = create_parser()
    args = parser.parse_args()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.command is None:
        parser.print_help()
        sys.exit(1)

    try:
        if args.command == "list-scenarios":
            list_available_scenarios(args.scenarios_dir)
        elif args.command == "validate":
            validate_scenario(args.scenario, args.summary, args.scenarios_dir)
        elif args.command == "run":
            run_command(args.scenario, args.report, args.scenarios_dir)
        elif args.command == "verify":
            if not verify_command(args.scenario, args.expected, args.scenarios_dir):
                sys.exit(1)
        elif args.command == "oracle":
            oracle_command(args.config, args.depth)
        elif args.command == "plot":
            plot_command(args.scenario, args.output, args.scenarios_dir)
        elif args.command == "export-log":
            export_log_command(args.scenario, args.output, args.scenarios_dir)
    except OSError as e:
        logger.error(f"File operation failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
