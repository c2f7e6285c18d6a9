"""Tests for the scenario_loader module."""

import json
import re
import tempfile
from pathlib import Path

import pytest

from safehousesim.amounts import TOKEN, USD
from safehousesim.errors import SchemaError, UnknownActor
from safehousesim.governance import GrantManager, SetParameter
from safehousesim.ledger import Address, AssetId
from safehousesim.safehouse import CriterionMode
from safehousesim.scenario_loader import ScenarioLoader
from safehousesim.staking import StakingAction


def minimal_scenario(**overrides):
    """Smallest valid scenario: five owners, one manager, one investor."""
    data = {
        "name": "minimal",
        "seed": 1,
        "world": {
            "owners": ["o1", "o2", "o3", "o4", "o5"],
            "threshold": 3,
            "managers": ["mgr1"],
            "investors": ["inv1"],
            "balances": [{"holder": "inv1", "asset": "USDS", "amount": "100"}],
        },
        "events": [
            {"block": 1, "actor": "inv1", "type": "investor_deposit", "amount": "100"},
            {"block": 2, "actor": "mgr1", "type": "sweep"},
        ],
    }
    data.update(overrides)
    return data


def with_events(*events):
    return minimal_scenario(events=list(events))


class TestScenarioLoader:
    """Test cases for the ScenarioLoader class."""

    def test_parse_minimal(self):
        """Test a minimal scenario parses into typed objects."""
        scenario = ScenarioLoader.parse(minimal_scenario())
        assert scenario.name == "minimal"
        assert scenario.seed == 1
        assert scenario.world.managers == ("mgr1",)
        assert scenario.world.balances[0].amount == 100 * TOKEN
        assert scenario.events[0].fields["amount"] == 100 * TOKEN
        assert scenario.end_block is None

    def test_validate_missing_field(self):
        """Test validation fails when a top-level field is missing."""
        data = minimal_scenario()
        del data["seed"]
        with pytest.raises(SchemaError, match="seed"):
            ScenarioLoader.validate_data(data)

    def test_validate_not_an_object(self):
        """Test validation fails on a JSON array."""
        with pytest.raises(SchemaError, match="JSON object"):
            ScenarioLoader.validate_data([])

    def test_threshold_above_owners(self):
        """Test a threshold larger than the owner set is refused."""
        data = minimal_scenario()
        data["world"]["threshold"] = 6
        with pytest.raises(SchemaError, match="threshold"):
            ScenarioLoader.parse(data)

    def test_label_in_two_roles(self):
        """Test one label cannot be both owner and manager."""
        data = minimal_scenario()
        data["world"]["managers"] = ["o1"]
        with pytest.raises(SchemaError, match="two roles"):
            ScenarioLoader.parse(data)

    def test_reserved_label(self):
        """Test contract labels cannot be declared as actors."""
        data = minimal_scenario()
        data["world"]["others"] = ["SAFEHOUSE"]
        with pytest.raises(SchemaError, match="reserved"):
            ScenarioLoader.parse(data)

    def test_undeclared_actor(self):
        """Test events naming unknown actors raise UnknownActor."""
        data = with_events({"block": 1, "actor": "ghost", "type": "sweep"})
        with pytest.raises(UnknownActor, match="ghost"):
            ScenarioLoader.parse(data)

    def test_unknown_event_type(self):
        """Test unknown event types are refused."""
        data = with_events({"block": 1, "actor": "mgr1", "type": "teleport"})
        with pytest.raises(SchemaError, match="unknown event type"):
            ScenarioLoader.parse(data)

    def test_event_missing_field(self):
        """Test a typed event must carry its fields."""
        data = with_events({"block": 1, "actor": "mgr1", "type": "manager_withdraw"})
        with pytest.raises(SchemaError, match="requires field 'basket'"):
            ScenarioLoader.parse(data)

    def test_blocks_must_not_decrease(self):
        """Test events must be ordered by block."""
        data = with_events(
            {"block": 5, "actor": "mgr1", "type": "sweep"},
            {"block": 4, "actor": "mgr1", "type": "sweep"},
        )
        with pytest.raises(SchemaError, match="precedes"):
            ScenarioLoader.parse(data)

    def test_end_block_before_last_event(self):
        """Test end_block cannot precede the last event."""
        with pytest.raises(SchemaError, match="end_block"):
            ScenarioLoader.parse(minimal_scenario(end_block=1))

    def test_boolean_is_not_an_integer(self):
        """Test JSON booleans are not accepted as integers."""
        with pytest.raises(SchemaError, match="integer"):
            ScenarioLoader.parse(minimal_scenario(seed=True))

    def test_amounts_must_be_strings(self):
        """Test token amounts are decimal strings, never JSON numbers."""
        data = with_events({"block": 1, "actor": "inv1", "type": "investor_deposit", "amount": 5})
        with pytest.raises(SchemaError, match="decimal string"):
            ScenarioLoader.parse(data)


class TestParams:
    """Test cases for parameter parsing."""

    def parse_params(self, params):
        data = minimal_scenario()
        data["world"]["params"] = params
        return ScenarioLoader.parse(data).world.params

    def test_usd_and_integer_fields(self):
        """Test USD fields parse as decimals and the rest as integers."""
        params = self.parse_params({"max_out": "250.5", "tolerance_bp": 100})
        assert params.max_out == 250 * USD + USD // 2
        assert params.tolerance_bp == 100

    def test_durations_round_up_to_blocks(self):
        """Test second and minute durations convert to whole blocks."""
        params = self.parse_params(
            {"cd_time_seconds": 601, "flag_y_minutes": 60, "whitelist_lock_seconds": 600}
        )
        assert params.cd_time_blocks == 41
        assert params.flag_y_blocks == 240
        assert params.whitelist_lock_blocks == 40

    def test_criterion_mode(self):
        """Test the criterion mode is 'one' or 'two'."""
        assert self.parse_params({"criterion_mode": "two"}).criterion_mode is CriterionMode.TWO
        with pytest.raises(SchemaError, match="'one' or 'two'"):
            self.parse_params({"criterion_mode": "three"})

    def test_category_caps(self):
        """Test category caps parse as sorted USD pairs."""
        params = self.parse_params({"category_caps": {"stable": "50", "core": "20"}})
        assert params.category_caps == (("core", 20 * USD), ("stable", 50 * USD))

    def test_unknown_parameter(self):
        """Test unknown parameter names are refused."""
        with pytest.raises(SchemaError, match="unknown parameter"):
            self.parse_params({"max_in": 1})

    def test_out_of_range(self):
        """Test range errors surface as schema errors."""
        with pytest.raises(SchemaError, match="tolerance_bp"):
            self.parse_params({"tolerance_bp": 20_000})


class TestEvents:
    """Test cases for typed event fields."""

    def test_withdraw_options(self):
        """Test withdrawal events keep their device and password options."""
        commitment = "ab" * 32
        data = minimal_scenario()
        data["world"]["others"] = ["thief"]
        data["events"] = [
            {
                "block": 1,
                "actor": "thief",
                "type": "manager_withdraw",
                "as": "mgr1",
                "device": "mgr1",
                "admin_password": "letmein",
                "next_commitment": commitment,
                "basket": {"USDS": "10"},
            }
        ]
        fields = ScenarioLoader.parse(data).events[0].fields
        assert fields["as"] == "mgr1"
        assert fields["device"] == "mgr1"
        assert fields["admin_password"] == "letmein"
        assert fields["next_commitment"].hex() == commitment
        assert list(fields["basket"]) == [(AssetId("USDS"), 10 * TOKEN)]

    def test_governance_actions(self):
        """Test proposals carry typed governance actions."""
        data = with_events(
            {
                "block": 1,
                "actor": "o1",
                "type": "propose",
                "action": {"kind": "set_parameter", "name": "max_out", "value": "50"},
            },
            {
                "block": 1,
                "actor": "o1",
                "type": "propose",
                "action": {"kind": "grant_manager", "address": "inv1"},
            },
        )
        events = ScenarioLoader.parse(data).events
        assert events[0].fields["action"] == SetParameter("max_out", 50 * USD)
        assert events[1].fields["action"] == GrantManager(Address.from_label("inv1"))

    def test_unknown_governance_action(self):
        """Test unknown action kinds are refused."""
        data = with_events(
            {"block": 1, "actor": "o1", "type": "propose", "action": {"kind": "self_destruct"}}
        )
        with pytest.raises(SchemaError, match="self_destruct"):
            ScenarioLoader.parse(data)

    def test_undeclared_feed(self):
        """Test quotes must come from declared feeds."""
        data = with_events(
            {
                "block": 1,
                "actor": "o1",
                "type": "feed_quote",
                "feed": "f9",
                "asset": "WETH",
                "price": "2000",
            }
        )
        with pytest.raises(SchemaError, match="f9"):
            ScenarioLoader.parse(data)

    def test_staking_event(self):
        """Test staking events build an instruction."""
        data = with_events(
            {
                "block": 1,
                "actor": "mgr1",
                "type": "staking",
                "action": "stake",
                "instruction": 1,
                "assets": ["LP-WETH"],
                "quantities": ["10"],
            }
        )
        fields = ScenarioLoader.parse(data).events[0].fields
        assert fields["action"] is StakingAction.STAKE
        assert fields["instruction"].quantities == (10 * TOKEN,)

    def test_staking_length_mismatch(self):
        """Test assets and quantities must pair up."""
        data = with_events(
            {
                "block": 1,
                "actor": "mgr1",
                "type": "staking",
                "action": "add_liquidity",
                "instruction": 1,
                "assets": ["WETH", "USDS"],
                "quantities": ["1"],
            }
        )
        with pytest.raises(SchemaError, match="quantities"):
            ScenarioLoader.parse(data)


class TestWorldSections:
    """Test cases for assets, pools and instructions."""

    def test_assets_and_pools(self):
        """Test asset references, pools and instructions parse together."""
        data = minimal_scenario()
        data["world"].update(
            {
                "staking_managers": ["sm-v1"],
                "feeds": ["f1"],
                "assets": [
                    {"symbol": "WETH", "reference": {"price": "2000", "band_bp": 500}},
                    {"symbol": "SCAM", "category": "junk"},
                ],
                "pools": [
                    {
                        "pool_id": "weth-usds",
                        "asset_a": "WETH",
                        "asset_b": "USDS",
                        "lp_token": "LP-WETH",
                        "reward_rate": "0.001",
                    }
                ],
                "instructions": [{"id": 1, "pool": "weth-usds", "staking_manager": "sm-v1"}],
            }
        )
        world = ScenarioLoader.parse(data).world
        assert world.assets[0].reference.price == 2000 * USD
        assert world.assets[0].reference.band_bp == 500
        assert world.assets[0].category == "core"
        assert world.assets[1].category == "junk"
        assert world.pools[0].reward_rate == USD // 1000
        assert world.instructions[0].staking_manager == "sm-v1"

    def test_instruction_unknown_pool(self):
        """Test instructions must name a declared pool."""
        data = minimal_scenario()
        data["world"].update(
            {
                "staking_managers": ["sm-v1"],
                "instructions": [{"id": 1, "pool": "nowhere", "staking_manager": "sm-v1"}],
            }
        )
        with pytest.raises(SchemaError, match="nowhere"):
            ScenarioLoader.parse(data)

    def test_admin_password_for_unknown_manager(self):
        """Test admin passwords must belong to declared device holders."""
        data = minimal_scenario()
        data["world"]["admin_passwords"] = {"ghost": "secret"}
        with pytest.raises(UnknownActor):
            ScenarioLoader.parse(data)

    def test_password_length_floor(self):
        """Test generated passwords cannot be configured shorter than 16."""
        data = minimal_scenario()
        data["world"]["password_length"] = 8
        with pytest.raises(SchemaError, match="at least 16"):
            ScenarioLoader.parse(data)

    @pytest.mark.parametrize(
        "section,value,message",
        [
            ("assets", {"symbol": "WETH"}, "world.assets must be a list"),
            ("balances", "USDS", "world.balances must be a list"),
            ("assets", ["WETH"], "world.assets[0] must be an object"),
            ("pools", [7], "world.pools[0] must be an object"),
            ("instructions", [None], "world.instructions[0] must be an object"),
            ("balances", [["inv1", "USDS", "1"]], "world.balances[0] must be an object"),
            (
                "assets",
                [{"symbol": "WETH", "reference": "2000.00"}],
                "world.assets[0].reference must be an object",
            ),
        ],
    )
    def test_malformed_sections(self, section, value, message):
        """Test sections of the wrong JSON type raise SchemaError instead of crashing."""
        data = minimal_scenario()
        data["world"][section] = value
        with pytest.raises(SchemaError, match=re.escape(message)):
            ScenarioLoader.parse(data)


class TestFilesAndSummary:
    """Test cases for file loading and summaries."""

    def test_load_from_file(self):
        """Test loading a scenario from a file."""
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "minimal.json"
            path.write_text(json.dumps(minimal_scenario()))
            scenario = ScenarioLoader.load_from_file(str(path))
        assert scenario.name == "minimal"

    def test_load_missing_file(self):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="File not found"):
            ScenarioLoader.load_from_file("/nonexistent/scenario.json")

    def test_load_invalid_json(self):
        """Test invalid JSON raises a decode error."""
        with pytest.raises(json.JSONDecodeError):
            ScenarioLoader.load_from_string("{not json")

    def test_get_summary(self):
        """Test the summary counts roles, events and event types."""
        summary = ScenarioLoader.get_summary(ScenarioLoader.parse(minimal_scenario()))
        assert summary["num_owners"] == 5
        assert summary["threshold"] == 3
        assert summary["num_managers"] == 1
        assert summary["num_assets"] == 1
        assert summary["num_events"] == 2
        assert summary["last_block"] == 2
        assert summary["criterion_mode"] == "one"
        assert summary["event_types"] == {"investor_deposit": 1, "sweep": 1}


class TestOracleConfig:
    """Test cases for adversary-search configs."""

    def test_range_grid(self):
        """Test a start/stop/step grid includes both ends."""
        config = ScenarioLoader.parse_oracle_config(
            {
                "max_out": "10.00",
                "tolerance_bp": 1000,
                "criterion_mode": "two",
                "grid": {"start": "1.00", "stop": "10.00", "step": "1.00"},
            }
        )
        assert config.grid == tuple(n * USD for n in range(1, 11))
        assert config.params.max_out == 10 * USD
        assert config.params.criterion_mode is CriterionMode.TWO
        assert config.depth == 5

    def test_list_grid_sorted_and_deduplicated(self):
        """Test listed grid values are sorted and deduplicated."""
        config = ScenarioLoader.parse_oracle_config(
            {"max_out": "10", "grid": ["5", "1", "5"], "depth": 3}
        )
        assert config.grid == (USD, 5 * USD)
        assert config.depth == 3

    def test_zero_in_grid(self):
        """Test zero-valued grid entries are refused."""
        with pytest.raises(SchemaError, match="positive"):
            ScenarioLoader.parse_oracle_config({"max_out": "10", "grid": ["0", "1"]})

    def test_missing_grid(self):
        """Test the grid is required."""
        with pytest.raises(SchemaError, match="grid"):
            ScenarioLoader.parse_oracle_config({"max_out": "10"})

    def test_example_config(self):
        """Test the example config shipped at the repository root loads."""
        path = Path(__file__).parent.parent / "oracle.example.json"
        config = ScenarioLoader.load_oracle_config(str(path))
        assert len(config.grid) == 10
        assert config.params.tolerance_bp == 1000
