"""Catalog of the scenarios bundled with the package."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from safehousesim.errors import SafeHouseError
from safehousesim.scenario_loader import Scenario, ScenarioLoader

logger = logging.getLogger(__name__)


class ScenarioCatalog:
    """Loads every scenario JSON of a directory into a name-keyed cache."""

    def __init__(self, scenarios_dir: Optional[str] = None):
        """Initialize the ScenarioCatalog.

        Args:
            scenarios_dir: Directory containing scenario JSON files. If not
                provided, uses the package's built-in scenarios directory.
        """
        if scenarios_dir:
            self.scenarios_dir = Path(scenarios_dir)
        else:
            self.scenarios_dir = Path(__file__).parent / "scenarios"

        self.scenarios_cache: Dict[str, Dict[str, Any]] = {}
        self._load_scenarios()

    def _load_scenarios(self):
        if not self.scenarios_dir.exists():
            logger.warning(f"Scenarios directory {self.scenarios_dir} does not exist")
            return

        for json_file in sorted(self.scenarios_dir.glob("*.json")):
            try:
                scenario = ScenarioLoader.load_from_file(str(json_file))
            except (OSError, ValueError, SafeHouseError) as e:
                logger.error(f"Failed to load scenario file {json_file}: {e}")
                continue
            self.scenarios_cache[json_file.stem] = {
                "scenario": scenario,
                "file_path": str(json_file),
            }
            logger.debug(f"Loaded scenario: {json_file.stem} with {len(scenario.events)} events")

        if not self.scenarios_cache:
            logger.warning("No scenario files were loaded successfully")

    def get_available_scenarios(self) -> List[Dict[str, Any]]:
        """Get list of available scenarios with metadata.

        Returns:
            List of dictionaries with name, description, event count and file path
        """
        scenarios = []
        for name, info in self.scenarios_cache.items():
            scenario = info["scenario"]
            scenarios.append(
                {
                    "name": name,
                    "description": scenario.description,
                    "event_count": len(scenario.events),
                    "file_path": info["file_path"],
                }
            )
        return sorted(scenarios, key=lambda x: x["name"])

    def get_scenario(self, name: str) -> Optional[Scenario]:
        info = self.scenarios_cache.get(name)
        return info["scenario"] if info else None

    def resolve(self, name_or_path: str) -> Scenario:
        """Return a bundled scenario by name, or load one from a file path.

        Raises:
            FileNotFoundError: If it is neither a bundled name nor an existing file
            SchemaError: If the file does not validate
        """
        scenario = self.get_scenario(name_or_path)
        if scenario is not None:
            return scenario
        if Path(name_or_path).exists():
            return ScenarioLoader.load_from_file(name_or_path)
        raise FileNotFoundError(f"No bundled scenario or file named '{name_or_path}'")
