"""Tests for the staking module."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safehousesim.amounts import TOKEN, USD
from safehousesim.errors import (
    FrozenAsset,
    InsufficientHoldings,
    InsufficientLP,
    InsufficientStake,
    NonProportional,
    NotAManager,
    SafeHouseError,
    UnknownInstruction,
    UnknownStakingManager,
    VaultLocked,
    ZeroAmount,
)
from safehousesim.ledger import PLATFORM, SAFEHOUSE, AssetId
from safehousesim.safehouse import hold
from safehousesim.staking import (
    MockPool,
    StakingAction,
    StakingInstruction,
    add_liquidity,
    add_pool,
    dispatch,
    register_instruction,
    register_staking_contract,
    remap_staking_manager,
    remove_liquidity,
)
from safehousesim.valuation import ReferencePrice, reference_guard, set_reference_price
from tests.conftest import standard_world

WETH = AssetId("WETH")
USDS = AssetId("USDS")
LP = AssetId("LP-WETH")
REWARD = AssetId("REWARD")


def new_pool(reward_rate=0):
    return MockPool("weth-usds", WETH, USDS, LP, REWARD, reward_rate=reward_rate)


def pooled_world(reward_rate=10**6, weth=1, usds=2000):
    """World whose safe-house holds weth WETH and usds USDS, with instruction 1 on sm-v1."""
    world = standard_world(vault_usds=usds)
    world.ledger.seed_balance(SAFEHOUSE, WETH, weth * TOKEN)
    add_pool(world, new_pool(reward_rate))
    sm = register_staking_contract(world, "sm-v1")
    register_staking_contract(world, "sm-v2")
    register_instruction(world, 1, "weth-usds", sm)
    return world


@pytest.fixture
def staking_world():
    """Factory for a world whose safe-house holds 1 WETH and 2000 USDS."""
    return pooled_world


def provide(world, weth=TOKEN, usds=2000 * TOKEN):
    instruction = StakingInstruction(1, (WETH, USDS), (weth, usds))
    return dispatch(world, world.address("mgr1"), StakingAction.ADD_LIQUIDITY, instruction)


def lp_action(world, action, amount):
    return dispatch(world, world.address("mgr1"), action, StakingInstruction(1, (LP,), (amount,)))


class TestConstantProductPool:
    """Test cases for the mock pool arithmetic."""

    def test_first_provision(self):
        """Test the first provision mints the integer square root of the product."""
        pool = new_pool()
        assert add_liquidity(pool, 4, 9) == 6
        assert (pool.reserve_a, pool.reserve_b, pool.lp_supply) == (4, 9, 6)

    def test_proportional_provision(self):
        """Test later provisions mint pro rata."""
        pool = new_pool()
        add_liquidity(pool, 4, 9)
        assert add_liquidity(pool, 8, 18) == 12

    def test_non_proportional(self):
        """Test off-ratio provisions are refused."""
        pool = new_pool()
        add_liquidity(pool, 4, 9)
        with pytest.raises(NonProportional):
            add_liquidity(pool, 8, 17)

    def test_zero_side(self):
        """Test both sides are required."""
        with pytest.raises(ZeroAmount):
            add_liquidity(new_pool(), 0, 9)

    def test_remove_floors(self):
        """Test removal returns the floored pro-rata share."""
        pool = new_pool()
        add_liquidity(pool, 4, 9)
        assert remove_liquidity(pool, 3) == (2, 4)
        assert (pool.reserve_a, pool.reserve_b, pool.lp_supply) == (2, 5, 3)

    def test_remove_too_much(self):
        """Test burning more LP than issued is refused."""
        pool = new_pool()
        add_liquidity(pool, 4, 9)
        with pytest.raises(InsufficientLP):
            remove_liquidity(pool, 7)

    @settings(max_examples=1000, deadline=None)
    @given(
        st.integers(min_value=1, max_value=10**24),
        st.integers(min_value=1, max_value=10**24),
        st.integers(min_value=1, max_value=1000),
    )
    def test_round_trip_is_exact(self, dx, dy, k):
        """Test removing the LP minted by a proportional provision returns exactly its inputs."""
        pool = new_pool()
        add_liquidity(pool, dx, dy)
        minted = add_liquidity(pool, dx * k, dy * k)
        out_a, out_b = remove_liquidity(pool, minted)
        assert (out_a, out_b) == (dx * k, dy * k)
        assert (pool.reserve_a, pool.reserve_b) == (dx, dy)


class TestDispatch:
    """Test cases for routing actions through staking managers."""

    def test_add_liquidity(self, staking_world):
        """Test LP is minted to the safe-house and inputs move to the platform."""
        world = staking_world()
        receipt = provide(world)
        minted = math.isqrt(TOKEN * 2000 * TOKEN)
        assert receipt.outputs == ((LP, minted),)
        assert receipt.staking_manager == "sm-v1"
        assert world.ledger.balance(SAFEHOUSE, LP) == minted
        assert world.ledger.balance(SAFEHOUSE, WETH) == 0
        assert world.ledger.balance(PLATFORM, USDS) == 2000 * TOKEN

    def test_stake_claim_unstake(self, staking_world):
        """Test rewards accrue linearly on staked LP and everything returns to the house."""
        world = staking_world(reward_rate=10**6)
        provide(world)
        lp_action(world, StakingAction.STAKE, 10 * TOKEN)
        assert world.ledger.balance(PLATFORM, LP) == 10 * TOKEN
        world.advance_blocks(5)
        receipt = lp_action(world, StakingAction.CLAIM_REWARDS, 0)
        assert receipt.outputs == ((REWARD, TOKEN // 2),)
        assert world.ledger.balance(SAFEHOUSE, REWARD) == TOKEN // 2
        lp_action(world, StakingAction.UNSTAKE, 10 * TOKEN)
        assert world.ledger.balance(PLATFORM, LP) == 0
        with pytest.raises(InsufficientStake):
            lp_action(world, StakingAction.UNSTAKE, 1)

    def test_remove_liquidity_returns_both_sides(self, staking_world):
        """Test removing all LP returns the full reserves to the house."""
        world = staking_world()
        minted = provide(world).outputs[0][1]
        receipt = lp_action(world, StakingAction.REMOVE_LIQUIDITY, minted)
        assert receipt.outputs == ((WETH, TOKEN), (USDS, 2000 * TOKEN))
        assert world.ledger.balance(SAFEHOUSE, WETH) == TOKEN
        assert world.ledger.total_supply(LP) == 0

    def test_outputs_follow_return_address(self, staking_world):
        """Test outputs go to whatever return address the registry holds."""
        world = staking_world()
        treasury = world.address("treasury")
        world.staking.registry.return_address = treasury
        minted = provide(world).outputs[0][1]
        assert world.ledger.balance(treasury, LP) == minted
        assert world.ledger.balance(SAFEHOUSE, LP) == 0

    def test_remap_keeps_instruction_ids(self, staking_world):
        """Test a pool moved to a new staking manager is reached by the old instruction id."""
        world = staking_world()
        remap_staking_manager(world, LP, world.address("sm-v2"))
        assert provide(world).staking_manager == "sm-v2"

    def test_remap_to_unknown_manager(self, staking_world):
        """Test remapping to an undeployed staking manager is refused."""
        world = staking_world()
        with pytest.raises(UnknownStakingManager):
            remap_staking_manager(world, LP, world.address("sm-v9"))

    def test_unknown_instruction(self, staking_world):
        """Test unregistered instruction ids are refused."""
        world = staking_world()
        instruction = StakingInstruction(9, (LP,), (1,))
        with pytest.raises(UnknownInstruction):
            dispatch(world, world.address("mgr1"), StakingAction.STAKE, instruction)

    def test_wrong_assets(self, staking_world):
        """Test an instruction naming the wrong assets is refused."""
        world = staking_world()
        with pytest.raises(UnknownInstruction):
            lp_action(world, StakingAction.ADD_LIQUIDITY, 1)

    def test_insufficient_holdings(self, staking_world):
        """Test the house must hold what it provides."""
        world = staking_world()
        with pytest.raises(InsufficientHoldings):
            provide(world, weth=2 * TOKEN, usds=4000 * TOKEN)

    def test_manager_only(self, staking_world):
        """Test outsiders cannot dispatch."""
        world = staking_world()
        instruction = StakingInstruction(1, (LP,), (1,))
        with pytest.raises(NotAManager):
            dispatch(world, world.address("eve"), StakingAction.STAKE, instruction)

    def test_locked(self, staking_world):
        """Test a locked house refuses staking actions."""
        world = staking_world()
        hold(world)
        with pytest.raises(VaultLocked):
            provide(world)

    def test_dispatch_is_logged(self, staking_world):
        """Test each dispatch is one staking_dispatch call on the public log."""
        world = staking_world()
        provide(world)
        record = world.ledger.public_log()[-1]
        assert record.call_name == "staking_dispatch"
        assert record.payload_fields()["action"] == "add_liquidity"
        assert record.outcome.message == "via sm-v1"

    def test_frozen_asset_not_provided(self, staking_world):
        """Test a frozen asset is refused before anything leaves the house."""
        world = staking_world()
        set_reference_price(world, ReferencePrice(WETH, 2000 * USD, 1000))
        reference_guard(world, WETH, 20000 * USD)
        with pytest.raises(FrozenAsset):
            provide(world)
        assert world.ledger.balance(SAFEHOUSE, WETH) == TOKEN
        assert world.ledger.balance(SAFEHOUSE, USDS) == 2000 * TOKEN
        assert world.ledger.total_supply(LP) == 0
        assert world.ledger.public_log()[-1].outcome.message.startswith("FrozenAsset:")

    def test_frozen_underlying_blocks_stake(self, staking_world):
        """Test LP backed by a frozen asset cannot be staked out of the house."""
        world = staking_world()
        minted = provide(world).outputs[0][1]
        world.oracle.frozen.add(WETH)
        with pytest.raises(FrozenAsset):
            lp_action(world, StakingAction.STAKE, minted)
        assert world.ledger.balance(SAFEHOUSE, LP) == minted
        assert world.ledger.balance(PLATFORM, LP) == 0

    def test_frozen_asset_may_come_home(self, staking_world):
        """Test removing liquidity still returns a frozen asset to the house."""
        world = staking_world()
        minted = provide(world).outputs[0][1]
        world.oracle.frozen.add(WETH)
        lp_action(world, StakingAction.REMOVE_LIQUIDITY, minted)
        assert world.ledger.balance(SAFEHOUSE, WETH) == TOKEN


staking_steps = st.lists(
    st.tuples(
        st.sampled_from(["add", "remove", "stake", "unstake", "claim", "wait"]),
        st.integers(min_value=1, max_value=10**17),
    ),
    max_size=20,
)


def _step_instruction(world, kind, amount):
    """The (action, instruction) a random step maps to, or None when it has nothing to move."""
    pool = world.staking.pools["weth-usds"]
    if kind == "add":
        if pool.lp_supply == 0:
            dx, dy = amount, 2000 * amount
        else:
            unit = math.gcd(pool.reserve_a, pool.reserve_b)
            unit_a, unit_b = pool.reserve_a // unit, pool.reserve_b // unit
            multiple = max(1, amount // unit_a)
            dx, dy = multiple * unit_a, multiple * unit_b
        return StakingAction.ADD_LIQUIDITY, StakingInstruction(1, (WETH, USDS), (dx, dy))
    if kind == "claim":
        return StakingAction.CLAIM_REWARDS, StakingInstruction(1, (LP,), (0,))
    position = world.staking.positions.get(LP)
    held = {
        "remove": world.ledger.balance(SAFEHOUSE, LP),
        "stake": world.ledger.balance(SAFEHOUSE, LP),
        "unstake": position.staked if position else 0,
    }[kind]
    quantity = amount % (held + 1)
    if quantity == 0:
        return None
    action = {
        "remove": StakingAction.REMOVE_LIQUIDITY,
        "stake": StakingAction.STAKE,
        "unstake": StakingAction.UNSTAKE,
    }[kind]
    return action, StakingInstruction(1, (LP,), (quantity,))


class TestStakingSequences:
    """Property tests over random add/remove/stake sequences."""

    @settings(max_examples=1000, deadline=None)
    @given(staking_steps)
    def test_outputs_return_to_house_only(self, steps):
        """Test every output is credited to the house and no manager ever holds a staking asset."""
        world = pooled_world(weth=10, usds=20000)
        manager = world.address("mgr1")
        pool = world.staking.pools["weth-usds"]
        ledger = world.ledger
        for kind, amount in steps:
            if kind == "wait":
                world.advance_blocks(amount % 5)
                continue
            planned = _step_instruction(world, kind, amount)
            if planned is None:
                continue
            action, instruction = planned
            before = {asset: ledger.balance(SAFEHOUSE, asset) for asset in (WETH, USDS, LP, REWARD)}
            try:
                receipt = dispatch(world, manager, action, instruction)
            except SafeHouseError:
                continue
            for asset, qty in receipt.outputs:
                assert ledger.balance(SAFEHOUSE, asset) - before[asset] == qty
            for asset in (WETH, USDS, LP, REWARD):
                assert ledger.balance(manager, asset) == 0
            assert ledger.balance(PLATFORM, WETH) == pool.reserve_a
            assert ledger.balance(PLATFORM, USDS) == pool.reserve_b
            assert ledger.balance(SAFEHOUSE, LP) + ledger.balance(PLATFORM, LP) == pool.lp_supply
            assert ledger.balance(SAFEHOUSE, WETH) + pool.reserve_a == 10 * TOKEN
