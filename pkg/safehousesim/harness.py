"""Scenario runner, reports and the adversarial checks run against a world.

A scenario is replayed event by event on a freshly built world. Failed
events are part of the result, not an abort: the outcome list, the public
log digest and the totals together form the report, whose bytes are the
determinism contract.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from safehousesim.amounts import BASIS_POINTS, TOKEN, USD, format_amount, format_usd
from safehousesim.errors import BoundViolation, InstanceTooLarge, SafeHouseError
from safehousesim.governance import (
    OwnerSet,
    execute,
    grant_manager,
    propose,
    revoke_manager,
    sign,
)
from safehousesim.ledger import SAFEHOUSE, Address
from safehousesim.otntp import (
    SALT_SIZE,
    Commitment,
    ProtectedFile,
    generate_password,
    open_protected_file,
    seal_protected_file,
    seed_commitment,
    verify_and_rotate,
)
from safehousesim.rng import SplitMix64
from safehousesim.safehouse import (
    CriterionMode,
    FlowKind,
    SafeHouseParams,
    StatusKind,
    counter_deposit,
    criterion_two_holds,
    evaluate_criterion_one,
    investor_deposit,
    investor_redeem,
    manager_withdraw,
    net_extracted,
    sweep_to_safehouse,
)
from safehousesim.scenario_loader import Scenario, ScenarioEvent, WorldConfig
from safehousesim.staking import (
    MockPool,
    add_pool,
    dispatch,
    register_instruction,
    register_staking_contract,
)
from safehousesim.valuation import (
    Basket,
    approve_asset,
    observe_price,
    push_quote,
    register_feed,
    set_reference_price,
)
from safehousesim.world import World

logger = logging.getLogger(__name__)

MAX_ORACLE_DEPTH = 8
MAX_ORACLE_SEQUENCES = 10**7


class ManagerDevice:
    """A manager's OTNTP wallet.

    Holds the password the house expects next, sealed in a ProtectedFile when
    an admin password is configured, and draws every following password from
    its own generator. A new password is adopted only once the world shows
    its commitment stored.
    """

    def __init__(
        self,
        label: str,
        manager: Address,
        rng: SplitMix64,
        admin_password: Optional[str] = None,
        password_length: int = 32,
    ):
        self.label = label
        self.manager = manager
        self.admin_password = admin_password
        self.password_length = password_length
        self._rng = rng
        self._plain: Optional[str] = None
        self._sealed: Optional[ProtectedFile] = None
        self._pending: Optional[Tuple[str, Commitment]] = None

    @property
    def protected_file(self) -> Optional[bytes]:
        return self._sealed.to_bytes() if self._sealed is not None else None

    def _store(self, password: str) -> None:
        if self.admin_password is None:
            self._plain = password
            return
        salt = self._rng.random_bytes(SALT_SIZE)
        self._sealed = seal_protected_file(password, self.admin_password, salt=salt)

    def _new_pending(self) -> Commitment:
        password = generate_password(self._rng.next_u64(), self.password_length)
        commitment = Commitment.of(password)
        self._pending = (password, commitment)
        return commitment

    def current_password(self, admin_password: Optional[str] = None) -> str:
        """Plaintext the house expects next; empty when nothing was seeded.

        Raises:
            MacMismatch: If the stored file does not open under the admin password
        """
        if self._sealed is not None:
            secret = self.admin_password if admin_password is None else admin_password
            return open_protected_file(self._sealed, secret or "").decode("utf-8")
        return self._plain or ""

    def prepare_seed(self) -> Commitment:
        return self._new_pending()

    def prepare(self, admin_password: Optional[str] = None) -> Tuple[str, Commitment]:
        """Current plaintext plus the commitment of a freshly drawn successor."""
        current = self.current_password(admin_password)
        return current, self._new_pending()

    def settle(self, world: World) -> bool:
        """Adopt the pending password if the world now stores its commitment."""
        if self._pending is None:
            return False
        password, commitment = self._pending
        self._pending = None
        state = world.auth.get(self.manager)
        if state is not None and state.commitment == commitment:
            self._store(password)
            return True
        return False


def build_world(config: WorldConfig, seed: int) -> Tuple[World, Dict[str, ManagerDevice]]:
    """Construct a world and one device per manager (and per `others` label)."""
    owners = OwnerSet(frozenset(Address.from_label(o) for o in config.owners), config.threshold)
    world = World(
        owners,
        params=config.params,
        seed=seed,
        seconds_per_block=config.seconds_per_block,
        stable_asset=config.stable_asset,
        fund_asset=config.fund_asset,
    )
    for label in config.owners + config.investors + config.others:
        world.address(label)

    approve_asset(world, config.stable_asset, "stable")
    for asset in config.assets:
        approve_asset(world, asset.asset, asset.category)
        if asset.reference is not None:
            set_reference_price(world, asset.reference)
    for feed in config.feeds:
        register_feed(world, feed)
    for pool in config.pools:
        add_pool(
            world,
            MockPool(
                pool_id=pool.pool_id,
                asset_a=pool.asset_a,
                asset_b=pool.asset_b,
                lp_token=pool.lp_token,
                reward_token=pool.reward_token,
                reward_rate=pool.reward_rate,
            ),
        )
        approve_asset(world, pool.lp_token, "lp")
    for label in config.staking_managers:
        register_staking_contract(world, label)
    for instruction in config.instructions:
        register_instruction(
            world,
            instruction.instruction_id,
            instruction.pool_id,
            world.address(instruction.staking_manager),
        )
    for label in config.managers:
        grant_manager(world, world.address(label))
    for balance in config.balances:
        world.ledger.seed_balance(world.address(balance.holder), balance.asset, balance.amount)

    admin_passwords = dict(config.admin_passwords)
    devices = {}
    for label in config.managers + config.others:
        devices[label] = ManagerDevice(
            label,
            world.address(label),
            world.rng.fork(f"device:{label}"),
            admin_password=admin_passwords.get(label),
            password_length=config.password_length,
        )
    logger.info(
        f"Built world: {len(config.owners)} owners ({config.threshold} to sign), "
        f"{len(config.managers)} managers, mode {config.params.criterion_mode.value}"
    )
    return world, devices


@dataclass(frozen=True)
class EventOutcome:
    index: int
    block: int
    actor: str
    type: str
    success: bool
    message: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "index": self.index,
            "block": self.block,
            "actor": self.actor,
            "type": self.type,
            "success": self.success,
            "message": self.message,
        }


@dataclass(frozen=True)
class TimelinePoint:
    """House totals right after one event."""

    index: int
    block: int
    extracted: int
    counter_deposits: int
    bound: int
    status: str


@dataclass(frozen=True)
class ReplayResult:
    attempted: int
    succeeded: int


@dataclass(frozen=True)
class Report:
    scenario: str
    seed: int
    final_status: str
    final_block: int
    outcomes: Tuple[EventOutcome, ...]
    totals: Dict[str, object]
    log_length: int
    log_digest: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "final_status": self.final_status,
            "final_block": self.final_block,
            "outcomes": [outcome.to_dict() for outcome in self.outcomes],
            "totals": dict(self.totals),
            "log_length": self.log_length,
            "log_digest": self.log_digest,
        }

    def to_json_bytes(self) -> bytes:
        """Canonical report bytes: sorted keys, two-space indent, trailing newline."""
        return (json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def replay_candidates(world: World) -> List[Tuple[Address, str]]:
    """Every distinct (caller, plaintext) pair revealed on the public log."""
    seen = set()
    candidates = []
    for record in world.ledger.public_log():
        if record.call_name == "manager_withdraw":
            plaintext = record.payload_fields().get("otntp_plaintext")
        elif record.call_name == "verify_and_rotate":
            plaintext = record.payload_fields().get("plaintext")
        else:
            continue
        key = (record.caller, plaintext)
        if plaintext and key not in seen:
            seen.add(key)
            candidates.append(key)
    return candidates


def replay_attacker(world: World) -> ReplayResult:
    """Resubmit every plaintext ever revealed, under its original caller.

    Each replay goes through the public verify_and_rotate entry point, so a
    rejected replay counts as an authentication failure like any other.
    """
    candidates = replay_candidates(world)
    succeeded = 0
    for caller, plaintext in candidates:
        attacker_next = Commitment.of(f"replay:{plaintext}")
        try:
            if verify_and_rotate(world, caller, plaintext, attacker_next):
                succeeded += 1
                logger.error(f"Replay of a logged password accepted for {world.label(caller)}")
        except SafeHouseError as e:
            logger.debug(f"Replay for {world.label(caller)} refused: {type(e).__name__}")
    logger.info(f"Replay attack: {succeeded} of {len(candidates)} accepted")
    return ReplayResult(attempted=len(candidates), succeeded=succeeded)


def audit_withdrawal_gaps(world: World) -> List[Tuple[int, int]]:
    """Consecutive successful withdrawals closer than min_blocks_between_withdrawals."""
    gap = world.params.min_blocks_between_withdrawals
    blocks = [
        record.block
        for record in world.ledger.public_log()
        if record.call_name == "manager_withdraw" and record.outcome.success
    ]
    return [(a, b) for a, b in zip(blocks, blocks[1:]) if b - a < gap]


class ScenarioRunner:
    """Replays a scenario's events against a freshly built world."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.world, self.devices = build_world(scenario.world, scenario.seed)
        self.outcomes: List[EventOutcome] = []
        self.timeline: List[TimelinePoint] = []
        self._handlers: Dict[str, Callable[[ScenarioEvent, Address], str]] = {
            "investor_deposit": self._investor_deposit,
            "investor_redeem": self._investor_redeem,
            "sweep": self._sweep,
            "seed_commitment": self._seed_commitment,
            "manager_withdraw": self._manager_withdraw,
            "counter_deposit": self._counter_deposit,
            "propose": self._propose,
            "sign": self._sign,
            "execute": self._execute,
            "revoke_manager": self._revoke_manager,
            "feed_quote": self._feed_quote,
            "observe_price": self._observe_price,
            "staking": self._staking,
            "replay_attack": self._replay_attack,
        }

    def run(self) -> "ScenarioRunner":
        logger.info(f"Running scenario '{self.scenario.name}' ({len(self.scenario.events)} events)")
        for event in self.scenario.events:
            self.apply(event)
        end_block = self.scenario.end_block
        if end_block is not None and end_block > self.world.height:
            self.world.advance_blocks(end_block - self.world.height)
        return self

    def apply(self, event: ScenarioEvent) -> EventOutcome:
        world = self.world
        world.advance_blocks(event.block - world.height)
        actor = world.address(event.actor)
        try:
            message = self._handlers[event.type](event, actor)
            success = True
        except SafeHouseError as e:
            message = f"{type(e).__name__}: {e}"
            success = False
            logger.debug(f"Event {event.index} ({event.type}) failed: {message}")
        outcome = EventOutcome(event.index, world.height, event.actor, event.type, success, message)
        self.outcomes.append(outcome)
        self._snapshot_point(event.index)
        return outcome

    def _snapshot_point(self, index: int) -> None:
        house = self.world.safehouse
        extracted = house.totals.extracted
        self.timeline.append(
            TimelinePoint(
                index=index,
                block=self.world.height,
                extracted=extracted,
                counter_deposits=house.totals.counter_deposits,
                bound=house.params.max_out + house.params.tolerance_bp * extracted // BASIS_POINTS,
                status=house.status.render(),
            )
        )

    def device(self, label: str) -> ManagerDevice:
        device = self.devices.get(label)
        if device is None:
            device = ManagerDevice(
                label,
                self.world.address(label),
                self.world.rng.fork(f"device:{label}"),
                password_length=self.scenario.world.password_length,
            )
            self.devices[label] = device
        return device

    def report(self) -> Report:
        world = self.world
        house = world.safehouse
        totals = {
            "extracted": format_usd(house.totals.extracted),
            "counter_deposits": format_usd(house.totals.counter_deposits),
            "net_extracted": format_usd(net_extracted(world)),
            "flags_raised": house.totals.flags_raised,
            "locks": house.totals.locks,
            "replay_candidates": len(replay_candidates(world)),
        }
        return Report(
            scenario=self.scenario.name,
            seed=self.scenario.seed,
            final_status=house.status.render(),
            final_block=world.height,
            outcomes=tuple(self.outcomes),
            totals=totals,
            log_length=len(world.ledger.public_log()),
            log_digest=world.ledger.log_digest(),
        )

    # Event handlers

    def _investor_deposit(self, event: ScenarioEvent, actor: Address) -> str:
        minted = investor_deposit(self.world, actor, event.fields["amount"])
        return f"minted {format_amount(minted)} {self.world.fund_asset}"

    def _investor_redeem(self, event: ScenarioEvent, actor: Address) -> str:
        paid = investor_redeem(self.world, actor, event.fields["shares"])
        return f"paid {format_amount(paid)} {self.world.stable_asset}"

    def _sweep(self, event: ScenarioEvent, actor: Address) -> str:
        return f"swept {format_amount(sweep_to_safehouse(self.world, actor))}"

    def _seed_commitment(self, event: ScenarioEvent, actor: Address) -> str:
        label = event.fields.get("as", event.actor)
        manager = self.world.address(label)
        literal = event.fields.get("commitment")
        if literal is not None:
            seed_commitment(self.world, manager, literal)
            return "seeded literal commitment"
        device = self.device(event.fields.get("device", label))
        seed_commitment(self.world, manager, device.prepare_seed())
        device.settle(self.world)
        return f"seeded from device {device.label}"

    def _manager_withdraw(self, event: ScenarioEvent, actor: Address) -> str:
        """Withdraw as `as` (default: the actor) with a password from a device or the event."""
        label = event.fields.get("as", event.actor)
        manager = self.world.address(label)
        device = None
        if "password" in event.fields:
            plaintext = event.fields["password"]
            next_commitment = event.fields.get("next_commitment") or Commitment.of(
                f"{event.actor}:{event.index}"
            )
        else:
            device = self.device(event.fields.get("device", label))
            secret = event.fields.get("admin_password")
            if secret is None and event.actor == device.label:
                secret = device.admin_password
            plaintext, next_commitment = device.prepare(secret)
            if "next_commitment" in event.fields:
                next_commitment = event.fields["next_commitment"]
        try:
            value = manager_withdraw(
                self.world, manager, event.fields["basket"], plaintext, next_commitment
            )
        finally:
            if device is not None:
                device.settle(self.world)
        return f"withdrew {format_usd(value)} USD"

    def _counter_deposit(self, event: ScenarioEvent, actor: Address) -> str:
        value = counter_deposit(self.world, actor, event.fields["basket"])
        return f"deposited {format_usd(value)} USD"

    def _propose(self, event: ScenarioEvent, actor: Address) -> str:
        return f"proposal {propose(self.world, actor, event.fields['action'])}"

    def _sign(self, event: ScenarioEvent, actor: Address) -> str:
        return f"{sign(self.world, actor, event.fields['proposal'])} signatures"

    def _execute(self, event: ScenarioEvent, actor: Address) -> str:
        execute(self.world, actor, event.fields["proposal"])
        return f"executed proposal {event.fields['proposal']}"

    def _revoke_manager(self, event: ScenarioEvent, actor: Address) -> str:
        revoke_manager(self.world, actor, self.world.address(event.fields["manager"]))
        return f"revoked {event.fields['manager']}"

    def _feed_quote(self, event: ScenarioEvent, actor: Address) -> str:
        fields = event.fields
        push_quote(self.world, fields["feed"], fields["asset"], fields["price"])
        return f"{fields['feed']} quoted {fields['asset']} at {format_usd(fields['price'])}"

    def _observe_price(self, event: ScenarioEvent, actor: Address) -> str:
        observe_price(self.world, actor, event.fields["asset"], event.fields["price"])
        return f"observed {event.fields['asset']} at {format_usd(event.fields['price'])}"

    def _staking(self, event: ScenarioEvent, actor: Address) -> str:
        receipt = dispatch(self.world, actor, event.fields["action"], event.fields["instruction"])
        outputs = ", ".join(f"{format_amount(q)} {a}" for a, q in receipt.outputs)
        return f"{receipt.action.value} via {receipt.staking_manager}" + (
            f": {outputs}" if outputs else ""
        )

    def _replay_attack(self, event: ScenarioEvent, actor: Address) -> str:
        result = replay_attacker(self.world)
        return f"{result.succeeded} of {result.attempted} replays accepted"


def run_scenario(scenario: Scenario) -> Report:
    """Build a world from the scenario, replay its events, and report."""
    return ScenarioRunner(scenario).run().report()


# Exhaustive adversary search

Step = Tuple[FlowKind, int]


@dataclass(frozen=True)
class OracleResult:
    max_net_extracted: int
    path: Tuple[Step, ...]
    total_withdrawn: int
    bound: int
    states_explored: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_net_extracted": format_usd(self.max_net_extracted),
            "path": [f"{kind.value}{format_usd(value)}" for kind, value in self.path],
            "total_withdrawn": format_usd(self.total_withdrawn),
            "bound": format_usd(self.bound),
            "states_explored": self.states_explored,
        }


def _search(
    params: SafeHouseParams, depth: int, grid: Sequence[int]
) -> Tuple[int, Tuple[Step, ...], int]:
    """Depth-first search over withdraw/deposit sequences, memoized on protocol state.

    Mode two state is (withdrawn, deposit credit, deposited); mode one state
    is the open window, if any, plus the running totals. A withdrawal that
    would lock the house ends that branch without extracting.
    """
    max_out = params.max_out
    tol = params.tolerance_bp
    memo: Dict[tuple, Tuple[int, Tuple[Step, ...]]] = {}

    def two(remaining: int, withdrawn: int, credit: int, deposited: int):
        key = (remaining, withdrawn, credit, deposited)
        if key in memo:
            return memo[key]
        best = (withdrawn - deposited, ())
        if remaining:
            for value in grid:
                total = withdrawn + value
                if value <= max_out and criterion_two_holds(total, credit, max_out, tol):
                    net, path = two(remaining - 1, total, credit, deposited)
                    if net > best[0]:
                        best = (net, ((FlowKind.WITHDRAW, value),) + path)
                net, path = two(
                    remaining - 1, withdrawn, credit + min(max_out, value), deposited + value
                )
                if net > best[0]:
                    best = (net, ((FlowKind.DEPOSIT, value),) + path)
        memo[key] = best
        return best

    def one(remaining: int, window: Optional[Tuple[int, int]], withdrawn: int, deposited: int):
        key = (remaining, window, withdrawn, deposited)
        if key in memo:
            return memo[key]
        best = (withdrawn - deposited, ())
        if remaining:
            for value in grid:
                if window is None and value <= max_out:
                    opened = None if evaluate_criterion_one(value, 0, tol) else (value, 0)
                    net, path = one(remaining - 1, opened, withdrawn + value, deposited)
                    if net > best[0]:
                        best = (net, ((FlowKind.WITHDRAW, value),) + path)
                after = window
                if window is not None:
                    owed, paid = window[0], window[1] + value
                    after = None if evaluate_criterion_one(owed, paid, tol) else (owed, paid)
                net, path = one(remaining - 1, after, withdrawn, deposited + value)
                if net > best[0]:
                    best = (net, ((FlowKind.DEPOSIT, value),) + path)
        memo[key] = best
        return best

    if params.criterion_mode is CriterionMode.TWO:
        net, path = two(depth, 0, 0, 0)
    else:
        net, path = one(depth, None, 0, 0)
    return net, path, len(memo)


def _adversary_world(
    params: SafeHouseParams, vault_usd: int, wallet_usd: int, seed: int = 0
) -> Tuple[World, Address, ManagerDevice]:
    """Single-manager world with a par-priced stable and a seeded device."""
    owner = Address.from_label("adversary-owner")
    world = World(OwnerSet(frozenset({owner}), 1), params=params, seed=seed)
    manager = world.address("adversary")
    world.address("adversary-owner")
    approve_asset(world, world.stable_asset, "stable")
    grant_manager(world, manager)
    world.ledger.seed_balance(SAFEHOUSE, world.stable_asset, vault_usd * TOKEN // USD)
    world.ledger.seed_balance(manager, world.stable_asset, wallet_usd * TOKEN // USD)
    device = ManagerDevice("adversary", manager, world.rng.fork("device:adversary"))
    seed_commitment(world, manager, device.prepare_seed())
    device.settle(world)
    return world, manager, device


def _stable_basket(world: World, usd: int) -> Basket:
    return Basket(((world.stable_asset, usd * TOKEN // USD),))


def _replay_path(params: SafeHouseParams, path: Sequence[Step]) -> int:
    withdrawn = sum(v for kind, v in path if kind is FlowKind.WITHDRAW)
    deposited = sum(v for kind, v in path if kind is FlowKind.DEPOSIT)
    replay_params = replace(
        params,
        min_blocks_between_withdrawals=0,
        cd_time_blocks=max(params.cd_time_blocks, len(path) + 1),
    )
    world, manager, device = _adversary_world(replay_params, withdrawn, deposited)
    for kind, value in path:
        world.advance_blocks(1)
        basket = _stable_basket(world, value)
        if kind is FlowKind.WITHDRAW:
            plaintext, next_commitment = device.prepare()
            manager_withdraw(world, manager, basket, plaintext, next_commitment)
            device.settle(world)
        else:
            counter_deposit(world, manager, basket)
    return net_extracted(world)


def adversary_loss_oracle(
    params: SafeHouseParams, depth: int, grid: Sequence[int], replay: bool = True
) -> OracleResult:
    """Maximum net value an adversary holding full credentials can extract.

    Args:
        params: House parameters (max_out, tolerance_bp, criterion_mode matter)
        depth: Number of adversary actions, at most 8
        grid: Candidate USD values for each withdrawal or deposit
        replay: Re-run the maximizing path on a real world and compare

    Raises:
        InstanceTooLarge: If depth exceeds 8 or the grid admits over 10**7 sequences
        BoundViolation: If the result exceeds max_out plus the tolerance share of
            the path's withdrawals, or the replayed world disagrees with the search
    """
    if depth < 0:
        raise ValueError(f"depth must be non-negative, got {depth}")
    if depth > MAX_ORACLE_DEPTH or len(grid) ** depth > MAX_ORACLE_SEQUENCES:
        raise InstanceTooLarge(
            f"{len(grid)} grid values at depth {depth} exceeds the exhaustive search limit"
        )
    grid = sorted(set(grid))
    net, path, states = _search(params, depth, grid)
    withdrawn = sum(v for kind, v in path if kind is FlowKind.WITHDRAW)
    bound = params.max_out + params.tolerance_bp * withdrawn // BASIS_POINTS
    logger.info(
        f"Adversary search depth {depth}: max net {format_usd(net)} "
        f"(bound {format_usd(bound)}, {states} states)"
    )
    if net > bound:
        raise BoundViolation(f"net extraction {format_usd(net)} exceeds bound {format_usd(bound)}")
    if replay and path:
        replayed = _replay_path(params, path)
        if replayed != net:
            raise BoundViolation(
                f"replayed path extracted {format_usd(replayed)}, search found {format_usd(net)}"
            )
    return OracleResult(net, tuple(path), withdrawn, bound, states)


@dataclass
class ScheduleResult:
    events: int = 0
    withdrawals: int = 0
    max_withdrawal: int = 0
    violations: List[str] = field(default_factory=list)


def run_adversary_schedule(
    seed: int, params: SafeHouseParams, max_events: int = 50
) -> ScheduleResult:
    """Random withdraw/deposit/wait schedule by a manager with full credentials.

    After every event the house must either be out of OPEN or satisfy the
    running extraction bound, and no single withdrawal may exceed max_out.
    """
    rng = SplitMix64(seed)
    top = 2 * params.max_out
    world, manager, device = _adversary_world(
        params, vault_usd=top * max_events, wallet_usd=top * max_events, seed=seed
    )
    result = ScheduleResult()
    for _ in range(rng.between(1, max_events)):
        world.advance_blocks(rng.below(4))
        value = rng.between(1, max(top, 1))
        basket = _stable_basket(world, value)
        try:
            if rng.below(2) == 0:
                plaintext, next_commitment = device.prepare()
                try:
                    value = manager_withdraw(world, manager, basket, plaintext, next_commitment)
                finally:
                    device.settle(world)
                result.withdrawals += 1
                result.max_withdrawal = max(result.max_withdrawal, value)
                if value > params.max_out:
                    result.violations.append(f"withdrawal {format_usd(value)} above max_out")
            else:
                counter_deposit(world, manager, basket)
        except SafeHouseError:
            pass
        result.events += 1

        house = world.safehouse
        allowance = house.allowance
        if (
            house.status.kind is StatusKind.OPEN
            and params.criterion_mode is CriterionMode.TWO
            and not criterion_two_holds(
                allowance.cum_withdrawn,
                allowance.cum_deposit_credit,
                params.max_out,
                params.tolerance_bp,
            )
        ):
            result.violations.append(
                f"open house at block {world.height} with withdrawn "
                f"{format_usd(allowance.cum_withdrawn)}, credit "
                f"{format_usd(allowance.cum_deposit_credit)}"
            )
        if house.status.kind is StatusKind.OPEN and house.window is not None:
            result.violations.append(f"open house with a pending window at block {world.height}")
    return result
