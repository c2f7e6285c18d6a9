"""Scenario file loader and validator."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Set, Tuple

from safehousesim.amounts import ceil_div, parse_amount, parse_usd
from safehousesim.errors import InvalidParameter, SchemaError, UnknownActor
from safehousesim.governance import (
    AddApprovedAsset,
    AddToWhitelist,
    GovernanceAction,
    GrantManager,
    HoldSafeHouse,
    RegisterStakingManager,
    ReleaseFlagged,
    ReopenSafeHouse,
    SetCategoryCap,
    SetParameter,
    SetReferencePrice,
    SetReturnAddress,
)
from safehousesim.ledger import DEFAULT_SECONDS_PER_BLOCK, SYSTEM_LABELS, Address, AssetId
from safehousesim.otntp import Commitment
from safehousesim.safehouse import CriterionMode, SafeHouseParams
from safehousesim.staking import StakingAction, StakingInstruction
from safehousesim.valuation import DEFAULT_BAND_BP, Basket, ReferencePrice

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssetConfig:
    asset: AssetId
    category: str
    reference: Optional[ReferencePrice] = None


@dataclass(frozen=True)
class PoolConfig:
    pool_id: str
    asset_a: AssetId
    asset_b: AssetId
    lp_token: AssetId
    reward_token: AssetId
    reward_rate: int


@dataclass(frozen=True)
class InstructionConfig:
    instruction_id: int
    pool_id: str
    staking_manager: str


@dataclass(frozen=True)
class BalanceConfig:
    holder: str
    asset: AssetId
    amount: int


@dataclass(frozen=True)
class WorldConfig:
    """Everything needed to construct a world before the first event."""

    owners: Tuple[str, ...]
    threshold: int
    managers: Tuple[str, ...] = ()
    investors: Tuple[str, ...] = ()
    others: Tuple[str, ...] = ()
    seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK
    stable_asset: AssetId = AssetId("USDS")
    fund_asset: AssetId = AssetId("FUND")
    params: SafeHouseParams = field(default_factory=SafeHouseParams)
    assets: Tuple[AssetConfig, ...] = ()
    feeds: Tuple[str, ...] = ()
    pools: Tuple[PoolConfig, ...] = ()
    staking_managers: Tuple[str, ...] = ()
    instructions: Tuple[InstructionConfig, ...] = ()
    balances: Tuple[BalanceConfig, ...] = ()
    admin_passwords: Tuple[Tuple[str, str], ...] = ()
    password_length: int = 32

    def actors(self) -> Set[str]:
        """Every label an event may name."""
        return (
            set(self.owners)
            | set(self.managers)
            | set(self.investors)
            | set(self.others)
            | set(self.staking_managers)
            | set(SYSTEM_LABELS)
        )


@dataclass(frozen=True)
class ScenarioEvent:
    index: int
    block: int
    actor: str
    type: str
    fields: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    world: WorldConfig
    events: Tuple[ScenarioEvent, ...]
    description: str = ""
    end_block: Optional[int] = None


@dataclass(frozen=True)
class OracleConfig:
    """Parameters and value grid of an exhaustive adversary search."""

    params: SafeHouseParams
    grid: Tuple[int, ...]
    depth: int = 5


class ScenarioLoader:
    """Load and validate scenario JSON into typed Scenario objects."""

    REQUIRED_FIELDS = {
        "scenario": ["name", "seed", "world", "events"],
        "world": ["owners", "threshold"],
        "event": ["block", "actor", "type"],
        "asset": ["symbol"],
        "pool": ["pool_id", "asset_a", "asset_b", "lp_token"],
        "instruction": ["id", "pool", "staking_manager"],
        "balance": ["holder", "asset", "amount"],
    }

    EVENT_FIELDS = {
        "investor_deposit": ["amount"],
        "investor_redeem": ["shares"],
        "sweep": [],
        "seed_commitment": [],
        "manager_withdraw": ["basket"],
        "counter_deposit": ["basket"],
        "propose": ["action"],
        "sign": ["proposal"],
        "execute": ["proposal"],
        "revoke_manager": ["manager"],
        "feed_quote": ["feed", "asset", "price"],
        "observe_price": ["asset", "price"],
        "staking": ["action", "instruction", "assets", "quantities"],
        "replay_attack": [],
    }

    # Parameters given as durations are converted to blocks at load time.
    DURATION_PARAMS = {
        "cd_time_seconds": ("cd_time_blocks", 1),
        "flag_y_minutes": ("flag_y_blocks", 60),
        "whitelist_lock_seconds": ("whitelist_lock_blocks", 1),
    }

    @staticmethod
    def load_from_file(file_path: str) -> Scenario:
        """Load and validate a scenario from a JSON file.

        Args:
            file_path: Path to the scenario JSON file

        Returns:
            Parsed scenario

        Raises:
            FileNotFoundError: If the file doesn't exist
            json.JSONDecodeError: If the file is not valid JSON
            SchemaError: If the scenario structure is invalid
        """
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")

        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"Failed to parse JSON from {file_path}: {e}")
            raise

        scenario = ScenarioLoader.parse(data)
        logger.info(f"Loaded scenario '{scenario.name}' from {file_path}")
        return scenario

    @staticmethod
    def load_from_string(json_string: str) -> Scenario:
        """Load and validate a scenario from a JSON string.

        Raises:
            json.JSONDecodeError: If the string is not valid JSON
            SchemaError: If the scenario structure is invalid
        """
        try:
            data = json.loads(json_string)
        except json.JSONDecodeError as e:
            logger.error(f"Failed to parse JSON string: {e}")
            raise
        return ScenarioLoader.parse(data)

    @staticmethod
    def validate_data(data: Any) -> None:
        """Validate raw scenario data, raising on the first problem found.

        Raises:
            SchemaError: If any part of the structure is invalid
            UnknownActor: If an event names an undeclared actor
        """
        ScenarioLoader.parse(data)

    @staticmethod
    def parse(data: Any) -> Scenario:
        if not isinstance(data, dict):
            raise SchemaError("Scenario must be a JSON object")
        ScenarioLoader._require(data, "scenario", "Scenario")

        world = ScenarioLoader._parse_world(data["world"])
        actors = world.actors()

        if not isinstance(data["events"], list):
            raise SchemaError("'events' must be a list")
        events = []
        previous_block = 0
        for i, raw in enumerate(data["events"]):
            event = ScenarioLoader._parse_event(i, raw, world, actors)
            if event.block < previous_block:
                raise SchemaError(
                    f"Event {i}: block {event.block} precedes block {previous_block}"
                )
            previous_block = event.block
            events.append(event)

        end_block = data.get("end_block")
        if end_block is not None:
            end_block = ScenarioLoader._int("'end_block'", end_block)
            if end_block < previous_block:
                raise SchemaError(f"'end_block' {end_block} precedes the last event")

        return Scenario(
            name=ScenarioLoader._str("'name'", data["name"]),
            seed=ScenarioLoader._int("'seed'", data["seed"]),
            world=world,
            events=tuple(events),
            description=str(data.get("description", "")),
            end_block=end_block,
        )

    @staticmethod
    def get_summary(scenario: Scenario) -> Dict[str, Any]:
        """Get a summary of a parsed scenario.

        Returns:
            Dictionary with counts and the event types used
        """
        world = scenario.world
        event_types: Dict[str, int] = {}
        for event in scenario.events:
            event_types[event.type] = event_types.get(event.type, 0) + 1
        return {
            "name": scenario.name,
            "seed": scenario.seed,
            "criterion_mode": world.params.criterion_mode.value,
            "num_owners": len(world.owners),
            "threshold": world.threshold,
            "num_managers": len(world.managers),
            "num_investors": len(world.investors),
            "num_assets": len(world.assets) + 1,
            "num_pools": len(world.pools),
            "num_events": len(scenario.events),
            "last_block": scenario.events[-1].block if scenario.events else 0,
            "event_types": dict(sorted(event_types.items())),
        }

    # Field helpers

    @staticmethod
    def _require(data: Mapping[str, Any], kind: str, location: str) -> None:
        if not isinstance(data, dict):
            raise SchemaError(f"{location} must be an object")
        for name in ScenarioLoader.REQUIRED_FIELDS[kind]:
            if name not in data:
                raise SchemaError(f"{location}: missing required field '{name}'")

    @staticmethod
    def _int(location: str, value: Any, minimum: int = 0) -> int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(f"{location} must be an integer")
        if value < minimum:
            raise SchemaError(f"{location} must be at least {minimum}")
        return value

    @staticmethod
    def _str(location: str, value: Any) -> str:
        if not isinstance(value, str) or not value:
            raise SchemaError(f"{location} must be a non-empty string")
        return value

    @staticmethod
    def _entries(location: str, value: Any) -> List[Any]:
        if not isinstance(value, list):
            raise SchemaError(f"{location} must be a list")
        return value

    @staticmethod
    def _labels(location: str, value: Any) -> Tuple[str, ...]:
        if not isinstance(value, list):
            raise SchemaError(f"{location} must be a list")
        labels = tuple(ScenarioLoader._str(f"{location}[{i}]", v) for i, v in enumerate(value))
        if len(set(labels)) != len(labels):
            raise SchemaError(f"{location} contains duplicates")
        return labels

    @staticmethod
    def _asset(location: str, value: Any) -> AssetId:
        try:
            return AssetId(ScenarioLoader._str(location, value))
        except ValueError as e:
            raise SchemaError(f"{location}: {e}")

    @staticmethod
    def _decimal(location: str, value: Any, usd: bool) -> int:
        if not isinstance(value, str):
            raise SchemaError(f"{location} must be a decimal string")
        try:
            return parse_usd(value) if usd else parse_amount(value)
        except ValueError as e:
            raise SchemaError(f"{location}: {e}")

    @staticmethod
    def _actor(location: str, label: Any, actors: Set[str]) -> str:
        label = ScenarioLoader._str(location, label)
        if label not in actors:
            raise UnknownActor(f"{location}: actor '{label}' is not declared")
        return label

    @staticmethod
    def _basket(location: str, value: Any) -> Basket:
        if not isinstance(value, dict):
            raise SchemaError(f"{location} must map asset symbols to amounts")
        entries = tuple(
            (
                ScenarioLoader._asset(f"{location} asset", symbol),
                ScenarioLoader._decimal(f"{location}['{symbol}']", amount, usd=False),
            )
            for symbol, amount in value.items()
        )
        return Basket(entries)

    @staticmethod
    def _commitment(location: str, value: Any) -> Commitment:
        text = ScenarioLoader._str(location, value)
        try:
            return Commitment.from_hex(text)
        except ValueError as e:
            raise SchemaError(f"{location}: {e}")

    # Sections

    @staticmethod
    def _parse_params(data: Any, seconds_per_block: int) -> SafeHouseParams:
        if not isinstance(data, dict):
            raise SchemaError("'world.params' must be an object")
        known = SafeHouseParams.field_names()
        values: Dict[str, Any] = {}
        for name, raw in data.items():
            location = f"world.params.{name}"
            if name in ScenarioLoader.DURATION_PARAMS:
                target, unit_seconds = ScenarioLoader.DURATION_PARAMS[name]
                seconds = ScenarioLoader._int(location, raw) * unit_seconds
                values[target] = ceil_div(seconds, seconds_per_block)
            elif name not in known:
                raise SchemaError(f"{location}: unknown parameter")
            elif name in SafeHouseParams.USD_FIELDS:
                values[name] = ScenarioLoader._decimal(location, raw, usd=True)
            elif name == "criterion_mode":
                try:
                    values[name] = CriterionMode(raw)
                except ValueError:
                    raise SchemaError(f"{location} must be 'one' or 'two'")
            elif name == "category_caps":
                if not isinstance(raw, dict):
                    raise SchemaError(f"{location} must map categories to USD caps")
                values[name] = tuple(
                    sorted(
                        (cat, ScenarioLoader._decimal(f"{location}.{cat}", cap, usd=True))
                        for cat, cap in raw.items()
                    )
                )
            else:
                values[name] = ScenarioLoader._int(location, raw)
        try:
            return SafeHouseParams(**values)
        except InvalidParameter as e:
            raise SchemaError(f"world.params: {e}")

    @staticmethod
    def _parse_world(data: Any) -> WorldConfig:
        if not isinstance(data, dict):
            raise SchemaError("'world' must be an object")
        ScenarioLoader._require(data, "world", "world")

        spb = ScenarioLoader._int(
            "world.seconds_per_block", data.get("seconds_per_block", DEFAULT_SECONDS_PER_BLOCK), 1
        )
        owners = ScenarioLoader._labels("world.owners", data["owners"])
        threshold = ScenarioLoader._int("world.threshold", data["threshold"], 1)
        if threshold > len(owners):
            raise SchemaError(f"world.threshold {threshold} exceeds {len(owners)} owners")
        managers = ScenarioLoader._labels("world.managers", data.get("managers", []))
        investors = ScenarioLoader._labels("world.investors", data.get("investors", []))
        others = ScenarioLoader._labels("world.others", data.get("others", []))
        sms = ScenarioLoader._labels("world.staking_managers", data.get("staking_managers", []))
        declared = list(owners) + list(managers) + list(investors) + list(others) + list(sms)
        if len(set(declared)) != len(declared):
            raise SchemaError("world: an actor label is declared in two roles")
        reserved = set(declared) & set(SYSTEM_LABELS)
        if reserved:
            raise SchemaError(f"world: labels {sorted(reserved)} are reserved")

        stable = ScenarioLoader._asset("world.stable_asset", data.get("stable_asset", "USDS"))
        fund = ScenarioLoader._asset("world.fund_asset", data.get("fund_asset", "FUND"))
        params = ScenarioLoader._parse_params(data.get("params", {}), spb)

        assets = []
        entries = ScenarioLoader._entries("world.assets", data.get("assets", []))
        for i, raw in enumerate(entries):
            location = f"world.assets[{i}]"
            ScenarioLoader._require(raw, "asset", location)
            asset = ScenarioLoader._asset(f"{location}.symbol", raw["symbol"])
            reference = None
            if "reference" in raw:
                ref = raw["reference"]
                if not isinstance(ref, dict):
                    raise SchemaError(f"{location}.reference must be an object")
                reference = ReferencePrice(
                    asset=asset,
                    price=ScenarioLoader._decimal(
                        f"{location}.reference.price", ref.get("price"), usd=True
                    ),
                    band_bp=ScenarioLoader._int(
                        f"{location}.reference.band_bp", ref.get("band_bp", DEFAULT_BAND_BP)
                    ),
                )
            category = ScenarioLoader._str(f"{location}.category", raw.get("category", "core"))
            assets.append(AssetConfig(asset, category, reference))

        feeds = ScenarioLoader._labels("world.feeds", data.get("feeds", []))

        pools = []
        entries = ScenarioLoader._entries("world.pools", data.get("pools", []))
        for i, raw in enumerate(entries):
            location = f"world.pools[{i}]"
            ScenarioLoader._require(raw, "pool", location)
            pools.append(
                PoolConfig(
                    pool_id=ScenarioLoader._str(f"{location}.pool_id", raw["pool_id"]),
                    asset_a=ScenarioLoader._asset(f"{location}.asset_a", raw["asset_a"]),
                    asset_b=ScenarioLoader._asset(f"{location}.asset_b", raw["asset_b"]),
                    lp_token=ScenarioLoader._asset(f"{location}.lp_token", raw["lp_token"]),
                    reward_token=ScenarioLoader._asset(
                        f"{location}.reward_token", raw.get("reward_token", "REWARD")
                    ),
                    reward_rate=ScenarioLoader._decimal(
                        f"{location}.reward_rate", raw.get("reward_rate", "0"), usd=True
                    ),
                )
            )
        pool_ids = {pool.pool_id for pool in pools}

        instructions = []
        entries = ScenarioLoader._entries("world.instructions", data.get("instructions", []))
        for i, raw in enumerate(entries):
            location = f"world.instructions[{i}]"
            ScenarioLoader._require(raw, "instruction", location)
            if raw["pool"] not in pool_ids:
                raise SchemaError(f"{location}: unknown pool '{raw['pool']}'")
            sm = ScenarioLoader._str(f"{location}.staking_manager", raw["staking_manager"])
            if sm not in sms:
                raise SchemaError(f"{location}: '{sm}' is not a declared staking manager")
            instructions.append(
                InstructionConfig(ScenarioLoader._int(f"{location}.id", raw["id"]), raw["pool"], sm)
            )

        actors = set(declared) | set(SYSTEM_LABELS)
        balances = []
        entries = ScenarioLoader._entries("world.balances", data.get("balances", []))
        for i, raw in enumerate(entries):
            location = f"world.balances[{i}]"
            ScenarioLoader._require(raw, "balance", location)
            balances.append(
                BalanceConfig(
                    holder=ScenarioLoader._actor(f"{location}.holder", raw["holder"], actors),
                    asset=ScenarioLoader._asset(f"{location}.asset", raw["asset"]),
                    amount=ScenarioLoader._decimal(f"{location}.amount", raw["amount"], False),
                )
            )

        admin_passwords = data.get("admin_passwords", {})
        if not isinstance(admin_passwords, dict):
            raise SchemaError("world.admin_passwords must map manager labels to passwords")
        for label in admin_passwords:
            if label not in managers and label not in others:
                raise UnknownActor(f"world.admin_passwords: '{label}' is not a declared manager")

        return WorldConfig(
            owners=owners,
            threshold=threshold,
            managers=managers,
            investors=investors,
            others=others,
            seconds_per_block=spb,
            stable_asset=stable,
            fund_asset=fund,
            params=params,
            assets=tuple(assets),
            feeds=feeds,
            pools=tuple(pools),
            staking_managers=sms,
            instructions=tuple(instructions),
            balances=tuple(balances),
            admin_passwords=tuple(sorted(admin_passwords.items())),
            password_length=ScenarioLoader._int(
                "world.password_length", data.get("password_length", 32), 16
            ),
        )

    @staticmethod
    def _parse_action(location: str, data: Any, actors: Set[str]) -> GovernanceAction:
        if not isinstance(data, dict) or "kind" not in data:
            raise SchemaError(f"{location} must be an object with a 'kind'")
        kind = data["kind"]

        def address(name: str) -> Address:
            label = ScenarioLoader._actor(f"{location}.{name}", data.get(name), actors)
            return Address.from_label(label)

        if kind == "set_parameter":
            name = ScenarioLoader._str(f"{location}.name", data.get("name"))
            if name in SafeHouseParams.USD_FIELDS:
                value = ScenarioLoader._decimal(f"{location}.value", data.get("value"), True)
            else:
                value = ScenarioLoader._int(f"{location}.value", data.get("value"))
            return SetParameter(name, value)
        if kind == "grant_manager":
            return GrantManager(address("address"))
        if kind == "set_reference_price":
            return SetReferencePrice(
                asset=ScenarioLoader._asset(f"{location}.asset", data.get("asset")),
                price=ScenarioLoader._decimal(f"{location}.price", data.get("price"), True),
                band_bp=ScenarioLoader._int(
                    f"{location}.band_bp", data.get("band_bp", DEFAULT_BAND_BP)
                ),
            )
        if kind == "set_return_address":
            return SetReturnAddress(address("address"))
        if kind == "reopen_safehouse":
            return ReopenSafeHouse()
        if kind == "hold_safehouse":
            return HoldSafeHouse()
        if kind == "register_staking_manager":
            return RegisterStakingManager(
                asset=ScenarioLoader._asset(f"{location}.asset", data.get("asset")),
                staking_manager=address("staking_manager"),
            )
        if kind == "add_to_whitelist":
            return AddToWhitelist(address("address"))
        if kind == "add_approved_asset":
            return AddApprovedAsset(
                asset=ScenarioLoader._asset(f"{location}.asset", data.get("asset")),
                category=ScenarioLoader._str(f"{location}.category", data.get("category", "core")),
            )
        if kind == "set_category_cap":
            return SetCategoryCap(
                category=ScenarioLoader._str(f"{location}.category", data.get("category")),
                cap=ScenarioLoader._decimal(f"{location}.cap", data.get("cap"), True),
            )
        if kind == "release_flagged":
            request_id = ScenarioLoader._int(f"{location}.request_id", data.get("request_id"))
            return ReleaseFlagged(request_id)
        raise SchemaError(f"{location}: unknown governance action '{kind}'")

    @staticmethod
    def _parse_event(
        index: int, data: Any, world: WorldConfig, actors: Set[str]
    ) -> ScenarioEvent:
        location = f"Event {index}"
        if not isinstance(data, dict):
            raise SchemaError(f"{location}: must be an object")
        ScenarioLoader._require(data, "event", location)

        block = ScenarioLoader._int(f"{location}: 'block'", data["block"])
        actor = ScenarioLoader._actor(f"{location}: 'actor'", data["actor"], actors)
        event_type = data["type"]
        if event_type not in ScenarioLoader.EVENT_FIELDS:
            raise SchemaError(f"{location}: unknown event type '{event_type}'")
        for name in ScenarioLoader.EVENT_FIELDS[event_type]:
            if name not in data:
                raise SchemaError(f"{location}: '{event_type}' requires field '{name}'")

        fields: Dict[str, Any] = {}
        where = f"{location}: "
        if event_type == "investor_deposit":
            fields["amount"] = ScenarioLoader._decimal(f"{where}'amount'", data["amount"], False)
        elif event_type == "investor_redeem":
            fields["shares"] = ScenarioLoader._decimal(f"{where}'shares'", data["shares"], False)
        elif event_type in ("manager_withdraw", "counter_deposit"):
            fields["basket"] = ScenarioLoader._basket(f"{where}'basket'", data["basket"])
        elif event_type == "propose":
            fields["action"] = ScenarioLoader._parse_action(
                f"{where}'action'", data["action"], actors
            )
        elif event_type in ("sign", "execute"):
            fields["proposal"] = ScenarioLoader._int(f"{where}'proposal'", data["proposal"])
        elif event_type == "revoke_manager":
            fields["manager"] = ScenarioLoader._actor(f"{where}'manager'", data["manager"], actors)
        elif event_type == "feed_quote":
            feed = ScenarioLoader._str(f"{where}'feed'", data["feed"])
            if feed not in world.feeds:
                raise SchemaError(f"{where}feed '{feed}' is not declared")
            fields["feed"] = feed
        elif event_type == "staking":
            try:
                fields["action"] = StakingAction(data["action"])
            except ValueError:
                raise SchemaError(f"{where}unknown staking action '{data['action']}'")
            assets = data["assets"]
            quantities = data["quantities"]
            if not isinstance(assets, list) or not isinstance(quantities, list):
                raise SchemaError(f"{where}'assets' and 'quantities' must be lists")
            try:
                fields["instruction"] = StakingInstruction(
                    instruction_id=ScenarioLoader._int(
                        f"{where}'instruction'", data["instruction"]
                    ),
                    assets=tuple(ScenarioLoader._asset(f"{where}asset", a) for a in assets),
                    quantities=tuple(
                        ScenarioLoader._decimal(f"{where}quantity", q, False) for q in quantities
                    ),
                )
            except InvalidParameter as e:
                raise SchemaError(f"{where}{e}")

        if event_type in ("feed_quote", "observe_price"):
            fields["asset"] = ScenarioLoader._asset(f"{where}'asset'", data["asset"])
            fields["price"] = ScenarioLoader._decimal(f"{where}'price'", data["price"], True)

        if event_type in ("manager_withdraw", "seed_commitment"):
            for name in ("as", "device"):
                if name in data:
                    fields[name] = ScenarioLoader._actor(f"{where}'{name}'", data[name], actors)
            for name in ("password", "admin_password"):
                if name in data:
                    fields[name] = ScenarioLoader._str(f"{where}'{name}'", data[name])
            for name in ("next_commitment", "commitment"):
                if name in data:
                    fields[name] = ScenarioLoader._commitment(f"{where}'{name}'", data[name])

        return ScenarioEvent(index=index, block=block, actor=actor, type=event_type, fields=fields)

    @staticmethod
    def load_oracle_config(file_path: str) -> OracleConfig:
        """Load an adversary-search config from a JSON file.

        The grid is either a list of USD decimal strings or an object with
        ``start``, ``stop`` and ``step`` (inclusive of stop).

        Raises:
            FileNotFoundError: If the file doesn't exist
            SchemaError: If the config structure is invalid
        """
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return ScenarioLoader.parse_oracle_config(data)

    @staticmethod
    def parse_oracle_config(data: Any) -> OracleConfig:
        if not isinstance(data, dict):
            raise SchemaError("Oracle config must be a JSON object")
        for name in ("max_out", "grid"):
            if name not in data:
                raise SchemaError(f"Oracle config: missing required field '{name}'")
        params = {
            key: data[key]
            for key in ("max_out", "tolerance_bp", "criterion_mode", "cd_time_blocks")
            if key in data
        }
        parsed = ScenarioLoader._parse_params(params, DEFAULT_SECONDS_PER_BLOCK)

        raw = data["grid"]
        if isinstance(raw, list):
            grid = [ScenarioLoader._decimal(f"grid[{i}]", v, usd=True) for i, v in enumerate(raw)]
        elif isinstance(raw, dict):
            start = ScenarioLoader._decimal("grid.start", raw.get("start"), usd=True)
            stop = ScenarioLoader._decimal("grid.stop", raw.get("stop"), usd=True)
            step = ScenarioLoader._decimal("grid.step", raw.get("step"), usd=True)
            if step == 0 or stop < start:
                raise SchemaError("grid needs a positive step and start <= stop")
            grid = list(range(start, stop + 1, step))
        else:
            raise SchemaError("'grid' must be a list or a start/stop/step object")
        if not grid or 0 in grid:
            raise SchemaError("grid values must be positive and non-empty")

        depth = ScenarioLoader._int("'depth'", data.get("depth", 5))
        return OracleConfig(params=parsed, grid=tuple(sorted(set(grid))), depth=depth)
