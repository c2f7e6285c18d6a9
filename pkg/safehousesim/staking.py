"""Staking Manager dispatch and the mock yield platforms it routes to.

The Safe-House never talks to a platform directly. A manager names an
instruction ID; the registry maps it to a pool and the pool's LP token to
the staking-manager contract currently serving it. Every output token goes
to the registry's return address.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

from safehousesim.amounts import checked, format_amount
from safehousesim.errors import (
    FrozenAsset,
    InsufficientHoldings,
    InsufficientLP,
    InsufficientStake,
    InvalidParameter,
    NonProportional,
    NoPosition,
    NotAManager,
    UnknownInstruction,
    UnknownStakingManager,
    VaultLocked,
    ZeroAmount,
)
from safehousesim.ledger import PLATFORM, SAFEHOUSE, Address, AssetId
from safehousesim.safehouse import StatusKind

if TYPE_CHECKING:
    from safehousesim.world import World

logger = logging.getLogger(__name__)

REWARD_RATE_SCALE = 10**8


class StakingAction(Enum):
    ADD_LIQUIDITY = "add_liquidity"
    REMOVE_LIQUIDITY = "remove_liquidity"
    STAKE = "stake"
    UNSTAKE = "unstake"
    CLAIM_REWARDS = "claim_rewards"


@dataclass(frozen=True)
class StakingInstruction:
    instruction_id: int
    assets: Tuple[AssetId, ...]
    quantities: Tuple[int, ...]

    def __post_init__(self):
        if len(self.assets) != len(self.quantities):
            raise InvalidParameter(
                f"instruction {self.instruction_id}: {len(self.assets)} assets but "
                f"{len(self.quantities)} quantities"
            )
        for qty in self.quantities:
            checked(qty)

    def to_payload(self) -> Dict[str, object]:
        return {
            "instruction_id": self.instruction_id,
            "assets": [asset.symbol for asset in self.assets],
            "quantities": [format_amount(qty) for qty in self.quantities],
        }


@dataclass
class MockPool:
    """Fee-less constant-product pool with a linear LP staking farm attached."""

    pool_id: str
    asset_a: AssetId
    asset_b: AssetId
    lp_token: AssetId
    reward_token: AssetId
    reward_rate: int = 0
    reserve_a: int = 0
    reserve_b: int = 0
    lp_supply: int = 0


def add_liquidity(pool: MockPool, dx: int, dy: int) -> int:
    """Deposit (dx, dy) into the pool and return the LP amount minted.

    The first provision mints isqrt(dx * dy); later provisions must match the
    reserve ratio exactly and mint lp_supply * dx / reserve_a.

    Raises:
        ZeroAmount: If either side is zero
        NonProportional: If (dx, dy) does not match the reserve ratio
    """
    checked(dx)
    checked(dy)
    if dx == 0 or dy == 0:
        raise ZeroAmount(f"liquidity for {pool.pool_id} needs both sides, got ({dx}, {dy})")
    if pool.lp_supply == 0:
        minted = math.isqrt(dx * dy)
    else:
        if dx * pool.reserve_b != dy * pool.reserve_a:
            raise NonProportional(
                f"({dx}, {dy}) does not match reserves ({pool.reserve_a}, {pool.reserve_b})"
            )
        minted = pool.lp_supply * dx // pool.reserve_a
    if minted == 0:
        raise ZeroAmount(f"provision to {pool.pool_id} too small to mint LP")
    pool.reserve_a = checked(pool.reserve_a + dx)
    pool.reserve_b = checked(pool.reserve_b + dy)
    pool.lp_supply = checked(pool.lp_supply + minted)
    return minted


def remove_liquidity(pool: MockPool, lp: int) -> Tuple[int, int]:
    """Burn lp and return the floored pro-rata share of both reserves.

    Raises:
        InsufficientLP: If lp exceeds the pool's LP supply
    """
    if lp > pool.lp_supply:
        raise InsufficientLP(f"burning {lp} LP from a supply of {pool.lp_supply}")
    if lp == 0:
        return 0, 0
    out_a = pool.reserve_a * lp // pool.lp_supply
    out_b = pool.reserve_b * lp // pool.lp_supply
    pool.reserve_a -= out_a
    pool.reserve_b -= out_b
    pool.lp_supply -= lp
    return out_a, out_b


@dataclass
class StakePosition:
    lp_token: AssetId
    staked: int = 0
    reward_debt_block: int = 0
    pending: int = 0


@dataclass(frozen=True)
class StakingManagerContract:
    address: Address
    label: str


@dataclass
class SMRegistry:
    """Instruction IDs to pools, pools (by LP token) to staking managers."""

    return_address: Address
    instructions: Dict[int, str] = field(default_factory=dict)
    managers: Dict[AssetId, Address] = field(default_factory=dict)
    contracts: Dict[Address, StakingManagerContract] = field(default_factory=dict)


@dataclass
class StakingState:
    registry: SMRegistry
    pools: Dict[str, MockPool] = field(default_factory=dict)
    positions: Dict[AssetId, StakePosition] = field(default_factory=dict)

    def pool_for_lp(self, lp_token: AssetId) -> Optional[MockPool]:
        for pool in self.pools.values():
            if pool.lp_token == lp_token:
                return pool
        return None


@dataclass(frozen=True)
class DispatchReceipt:
    action: StakingAction
    instruction_id: int
    staking_manager: str
    outputs: Tuple[Tuple[AssetId, int], ...]


def add_pool(world: "World", pool: MockPool) -> None:
    world.staking.pools[pool.pool_id] = pool
    logger.debug(f"Added pool {pool.pool_id} ({pool.asset_a}/{pool.asset_b} -> {pool.lp_token})")


def register_staking_contract(world: "World", label: str) -> Address:
    address = world.address(label)
    world.staking.registry.contracts[address] = StakingManagerContract(address, label)
    return address


def register_instruction(
    world: "World", instruction_id: int, pool_id: str, staking_manager: Address
) -> None:
    """Bind an instruction ID to a pool and the pool to a staking manager (construction only)."""
    if pool_id not in world.staking.pools:
        raise UnknownInstruction(f"instruction {instruction_id} names unknown pool '{pool_id}'")
    registry = world.staking.registry
    if staking_manager not in registry.contracts:
        raise UnknownStakingManager(f"{world.label(staking_manager)} is not a staking manager")
    registry.instructions[instruction_id] = pool_id
    registry.managers[world.staking.pools[pool_id].lp_token] = staking_manager


def remap_staking_manager(world: "World", lp_token: AssetId, staking_manager: Address) -> None:
    """Route a pool to another staking manager; instruction IDs keep working."""
    registry = world.staking.registry
    if staking_manager not in registry.contracts:
        raise UnknownStakingManager(f"{world.label(staking_manager)} is not a staking manager")
    if world.staking.pool_for_lp(lp_token) is None:
        raise InvalidParameter(f"{lp_token} is not the LP token of any pool")
    previous = registry.managers.get(lp_token)
    registry.managers[lp_token] = staking_manager
    logger.info(
        f"Remapped {lp_token} from "
        f"{world.label(previous) if previous else 'nobody'} to {world.label(staking_manager)}"
    )


def _require_holdings(world: "World", asset: AssetId, amount: int) -> None:
    held = world.ledger.balance(SAFEHOUSE, asset)
    if held < amount:
        raise InsufficientHoldings(f"safe-house holds {format_amount(held)} {asset}")


def _require_unfrozen(world: "World", asset: AssetId) -> None:
    frozen = world.oracle.frozen
    pool = world.staking.pool_for_lp(asset)
    sides: Tuple[AssetId, ...] = (pool.asset_a, pool.asset_b) if pool is not None else ()
    if asset in frozen or any(side in frozen for side in sides):
        raise FrozenAsset(f"{asset} is frozen and may not leave the safe-house")


def _accrue(world: "World", position: StakePosition, pool: MockPool) -> None:
    elapsed = world.height - position.reward_debt_block
    if elapsed > 0 and position.staked:
        position.pending += position.staked * pool.reward_rate * elapsed // REWARD_RATE_SCALE
    position.reward_debt_block = world.height


def _pool_of(world: "World", lp_token: AssetId) -> MockPool:
    pool = world.staking.pool_for_lp(lp_token)
    if pool is None:
        raise UnknownInstruction(f"{lp_token} is not the LP token of any pool")
    return pool


def stake_lp(world: "World", lp_token: AssetId, amount: int) -> None:
    """Move safe-house LP tokens into the pool's farm."""
    pool = _pool_of(world, lp_token)
    if amount == 0:
        return
    _require_unfrozen(world, lp_token)
    _require_holdings(world, lp_token, amount)
    position = world.staking.positions.get(lp_token)
    if position is None:
        position = StakePosition(lp_token=lp_token, reward_debt_block=world.height)
        world.staking.positions[lp_token] = position
    _accrue(world, position, pool)
    world.ledger.transfer(SAFEHOUSE, PLATFORM, lp_token, amount)
    position.staked += amount


def unstake_lp(world: "World", lp_token: AssetId, amount: int) -> None:
    """Return staked LP to the return address; accrued rewards stay claimable."""
    pool = _pool_of(world, lp_token)
    position = world.staking.positions.get(lp_token)
    staked = position.staked if position else 0
    if position is None or staked < amount:
        raise InsufficientStake(f"{format_amount(staked)} {lp_token} staked, asked {amount}")
    _accrue(world, position, pool)
    position.staked -= amount
    world.ledger.transfer(PLATFORM, world.staking.registry.return_address, lp_token, amount)


def claim_rewards(world: "World", lp_token: AssetId) -> int:
    """Mint accrued farm rewards to the return address and advance the checkpoint."""
    pool = _pool_of(world, lp_token)
    position = world.staking.positions.get(lp_token)
    if position is None:
        raise NoPosition(f"no stake position in {lp_token}")
    _accrue(world, position, pool)
    reward = position.pending
    position.pending = 0
    if reward:
        world.ledger.mint(world.staking.registry.return_address, pool.reward_token, reward)
    return reward


def _pair_quantities(pool: MockPool, instr: StakingInstruction) -> Tuple[int, int]:
    given = dict(zip(instr.assets, instr.quantities))
    if set(given) != {pool.asset_a, pool.asset_b}:
        raise UnknownInstruction(
            f"instruction {instr.instruction_id} serves {pool.asset_a}/{pool.asset_b}, "
            f"got {', '.join(a.symbol for a in instr.assets)}"
        )
    return given[pool.asset_a], given[pool.asset_b]


def _single_quantity(pool: MockPool, instr: StakingInstruction) -> int:
    if instr.assets != (pool.lp_token,):
        raise UnknownInstruction(
            f"instruction {instr.instruction_id} expects only {pool.lp_token}"
        )
    return instr.quantities[0]


def _perform(
    world: "World", action: StakingAction, pool: MockPool, instr: StakingInstruction
) -> List[Tuple[AssetId, int]]:
    ledger = world.ledger
    return_address = world.staking.registry.return_address

    if action is StakingAction.ADD_LIQUIDITY:
        dx, dy = _pair_quantities(pool, instr)
        _require_unfrozen(world, pool.asset_a)
        _require_unfrozen(world, pool.asset_b)
        _require_holdings(world, pool.asset_a, dx)
        _require_holdings(world, pool.asset_b, dy)
        minted = add_liquidity(pool, dx, dy)
        ledger.transfer(SAFEHOUSE, PLATFORM, pool.asset_a, dx)
        ledger.transfer(SAFEHOUSE, PLATFORM, pool.asset_b, dy)
        ledger.mint(return_address, pool.lp_token, minted)
        return [(pool.lp_token, minted)]

    if action is StakingAction.REMOVE_LIQUIDITY:
        lp = _single_quantity(pool, instr)
        _require_holdings(world, pool.lp_token, lp)
        out_a, out_b = remove_liquidity(pool, lp)
        ledger.burn(SAFEHOUSE, pool.lp_token, lp)
        ledger.transfer(PLATFORM, return_address, pool.asset_a, out_a)
        ledger.transfer(PLATFORM, return_address, pool.asset_b, out_b)
        return [(pool.asset_a, out_a), (pool.asset_b, out_b)]

    if action is StakingAction.STAKE:
        stake_lp(world, pool.lp_token, _single_quantity(pool, instr))
        return []

    if action is StakingAction.UNSTAKE:
        amount = _single_quantity(pool, instr)
        unstake_lp(world, pool.lp_token, amount)
        return [(pool.lp_token, amount)]

    _single_quantity(pool, instr)
    return [(pool.reward_token, claim_rewards(world, pool.lp_token))]


def dispatch(
    world: "World", caller: Address, action: StakingAction, instr: StakingInstruction
) -> DispatchReceipt:
    """Route a staking action through the staking manager mapped to its instruction.

    Raises:
        NotAManager: If the caller does not hold the Manager role
        VaultLocked: If the house is locked
        UnknownInstruction: If the instruction ID or its assets are not registered
        InsufficientHoldings: If the safe-house cannot fund the action
        FrozenAsset: If a frozen asset or LP token would leave the safe-house
    """
    fields = {"action": action.value, "instruction": instr}
    with world.recording(caller, SAFEHOUSE, "staking_dispatch", fields) as call:
        if not world.governance.is_manager(caller):
            raise NotAManager(f"{world.label(caller)} does not hold the Manager role")
        if world.safehouse.status.kind is StatusKind.LOCKED:
            raise VaultLocked(f"safe-house is {world.safehouse.status.render()}")
        registry = world.staking.registry
        pool_id = registry.instructions.get(instr.instruction_id)
        if pool_id is None:
            raise UnknownInstruction(f"instruction {instr.instruction_id} is not registered")
        pool = world.staking.pools[pool_id]
        contract = registry.contracts[registry.managers[pool.lp_token]]

        outputs = _perform(world, action, pool, instr)
        call.message = f"via {contract.label}"
        logger.info(
            f"{action.value} on {pool.pool_id} via {contract.label}: "
            + ", ".join(f"{format_amount(q)} {a}" for a, q in outputs)
        )
        return DispatchReceipt(action, instr.instruction_id, contract.label, tuple(outputs))
