"""The Safe-House state machine.

Investor money enters through MAINSC and is swept into the Safe-House.
Managers take baskets out one withdrawal at a time, each capped by
``max_out`` and gated by an OTNTP reveal. What leaves must come back:

* Criterion 1 closes the house after every withdrawal and reopens it once
  counter deposits reach the withdrawn value less the tolerance, within
  ``cd_time_blocks``.
* Criterion 2 keeps the house open while the running net extraction stays
  below ``max_out`` plus the tolerance share of everything withdrawn.

Redemptions, sweeps and staking outputs are MAINSC or platform flows and never
count toward either criterion.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

from safehousesim.amounts import BASIS_POINTS, TOKEN, USD, format_amount, format_usd, value_of
from safehousesim.errors import (
    AllowanceExhausted,
    AuthRejected,
    Flagged,
    FrozenAsset,
    InsufficientHoldings,
    InsufficientLiquidity,
    InsufficientShares,
    InvalidParameter,
    LimitExceeded,
    NotAManager,
    NotAuthorized,
    TooSoon,
    UnknownFlagRequest,
    UnknownParameter,
    VaultLocked,
    VaultNotOpen,
    WhitelistLocked,
    ZeroAmount,
    ZeroNav,
)
from safehousesim.ledger import MAINSC, SAFEHOUSE, Address
from safehousesim.otntp import Commitment, _verify_and_rotate, auth_state
from safehousesim.valuation import (
    Basket,
    category_totals,
    entry_values,
    live_price,
    quote_value,
    value_basket,
)

if TYPE_CHECKING:
    from safehousesim.world import World

logger = logging.getLogger(__name__)


class CriterionMode(Enum):
    ONE = "one"
    TWO = "two"


class StatusKind(Enum):
    OPEN = "open"
    AWAITING_COUNTER_DEPOSIT = "awaiting_counter_deposit"
    LOCKED = "locked"


class LockReason(Enum):
    WINDOW_EXPIRED = "window_expired"
    AUTH_FAILURES = "auth_failures"
    GOVERNANCE_HOLD = "governance_hold"
    LIMIT_BREACHED = "limit_breached"


class FlagResult(Enum):
    CLEAR = "clear"
    FLAGGED = "flagged"


class FlowKind(Enum):
    WITHDRAW = "W"
    DEPOSIT = "D"


@dataclass(frozen=True)
class SafeHouseParams:
    """Governing parameters; every field is settable by governance except criterion_mode."""

    max_out: int = 100 * USD
    tolerance_bp: int = 500
    cd_time_blocks: int = 40
    min_blocks_between_withdrawals: int = 0
    criterion_mode: CriterionMode = CriterionMode.ONE
    max_failed_auth: int = 3
    flag_x: int = 0
    flag_y_blocks: int = 0
    flag_z: int = 0
    whitelist_lock_blocks: int = 0
    quote_max_age_blocks: int = 0
    ma_window_blocks: int = 240
    category_caps: Tuple[Tuple[str, int], ...] = ()

    USD_FIELDS = ("max_out", "flag_x", "flag_z")

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, int) and value < 0:
                raise InvalidParameter(f"{f.name} must be non-negative, got {value}")
        if self.tolerance_bp > BASIS_POINTS:
            raise InvalidParameter(f"tolerance_bp must be at most {BASIS_POINTS}")
        if self.max_failed_auth < 1:
            raise InvalidParameter("max_failed_auth must be at least 1")
        if not isinstance(self.criterion_mode, CriterionMode):
            raise InvalidParameter(f"unknown criterion_mode {self.criterion_mode!r}")
        for category, cap in self.category_caps:
            if cap < 0:
                raise InvalidParameter(f"category cap for '{category}' must be non-negative")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def with_parameter(self, name: str, value: int) -> "SafeHouseParams":
        """Copy with one parameter changed, as a governance SetParameter does.

        Raises:
            UnknownParameter: If name is not a parameter field
            InvalidParameter: If the field is immutable or value out of range
        """
        if name not in self.field_names():
            raise UnknownParameter(f"'{name}' is not a SafeHouseParams field")
        if name == "criterion_mode":
            raise InvalidParameter("criterion_mode is fixed at world construction")
        if name == "category_caps":
            raise InvalidParameter("category caps change through set_category_cap")
        if not isinstance(value, int) or isinstance(value, bool):
            raise InvalidParameter(f"{name} takes an integer value, got {value!r}")
        return replace(self, **{name: value})

    def with_category_cap(self, category: str, cap: int) -> "SafeHouseParams":
        caps = dict(self.category_caps)
        caps[category] = cap
        return replace(self, category_caps=tuple(sorted(caps.items())))

    def cap_for(self, category: str) -> Optional[int]:
        return dict(self.category_caps).get(category)


@dataclass(frozen=True)
class SafeHouseStatus:
    kind: StatusKind = StatusKind.OPEN
    reason: Optional[LockReason] = None

    def render(self) -> str:
        if self.kind is StatusKind.LOCKED and self.reason is not None:
            return f"locked:{self.reason.value}"
        return self.kind.value


@dataclass
class CounterDepositWindow:
    withdrawer: Address
    opened_block: int
    deadline_block: int
    withdrawn_value: int
    accumulated_value: int = 0


@dataclass
class AllowanceState:
    start_block: int = 0
    cum_withdrawn: int = 0
    cum_deposit_credit: int = 0


@dataclass(frozen=True)
class WhitelistEntry:
    address: Address
    added_block: int


@dataclass(frozen=True)
class FundShareState:
    total_shares: int
    nav: int

    def share_price(self) -> int:
        """USD price of one whole fund token."""
        if self.total_shares == 0:
            return USD
        return self.nav * TOKEN // self.total_shares


@dataclass(frozen=True)
class FlaggedRedemption:
    request_id: int
    investor: Address
    shares: int
    payout: int
    value: int
    block: int


@dataclass
class SafeHouseTotals:
    extracted: int = 0
    counter_deposits: int = 0
    flags_raised: int = 0
    locks: int = 0


@dataclass
class SafeHouseState:
    params: SafeHouseParams
    status: SafeHouseStatus = field(default_factory=SafeHouseStatus)
    window: Optional[CounterDepositWindow] = None
    allowance: AllowanceState = field(default_factory=AllowanceState)
    auth_failures: int = 0
    last_withdraw_block: Optional[int] = None
    whitelist: Dict[Address, WhitelistEntry] = field(default_factory=dict)
    net_deposits: Dict[Address, int] = field(default_factory=dict)
    outflows: List[Tuple[int, Address, int]] = field(default_factory=list)
    flag_queue: Dict[int, FlaggedRedemption] = field(default_factory=dict)
    next_flag_id: int = 0
    totals: SafeHouseTotals = field(default_factory=SafeHouseTotals)


# Pure criterion checks


def evaluate_criterion_one(withdrawn: int, accumulated: int, tolerance_bp: int) -> bool:
    """True when counter deposits cover the withdrawal less the tolerance (inclusive)."""
    return accumulated >= withdrawn * (BASIS_POINTS - tolerance_bp) // BASIS_POINTS


def criterion_two_holds(
    cum_withdrawn: int, cum_deposit_credit: int, max_out: int, tolerance_bp: int
) -> bool:
    """Strict running bound on net extraction: W - C < max_out + tol * W."""
    bound = max_out + tolerance_bp * cum_withdrawn // BASIS_POINTS
    return cum_withdrawn - cum_deposit_credit < bound


def evaluate_criterion_two(
    events: Sequence[Tuple[FlowKind, int]], max_out: int, tolerance_bp: int
) -> Optional[int]:
    """Index of the first prefix that breaks the Criterion 2 bound, or None."""
    withdrawn = 0
    credit = 0
    for index, (kind, value) in enumerate(events):
        if kind is FlowKind.WITHDRAW:
            withdrawn += value
        else:
            credit += min(max_out, value)
        if not criterion_two_holds(withdrawn, credit, max_out, tolerance_bp):
            return index
    return None


# Status transitions


def lock(world: "World", reason: LockReason) -> None:
    house = world.safehouse
    house.status = SafeHouseStatus(StatusKind.LOCKED, reason)
    house.totals.locks += 1
    logger.warning(f"Safe-house LOCKED ({reason.value}) at block {world.height}")


def reopen(world: "World") -> None:
    """Governance restore: open the house and start a fresh allowance period.

    Failure counters are cleared and every manager commitment is dropped, so
    each manager re-seeds before withdrawing again and no password revealed
    while the house was locked stays valid.
    """
    house = world.safehouse
    previous = house.status.render()
    house.status = SafeHouseStatus()
    house.window = None
    house.auth_failures = 0
    house.allowance = AllowanceState(start_block=world.height)
    for manager in world.governance.managers:
        state = auth_state(world, manager)
        state.failure_count = 0
        state.commitment = None
    logger.info(f"Safe-house reopened from {previous} at block {world.height}")


def hold(world: "World") -> None:
    lock(world, LockReason.GOVERNANCE_HOLD)


def on_block_tick(world: "World") -> None:
    """Per-block deadline check: an unpaid counter-deposit window locks the house."""
    house = world.safehouse
    window = house.window
    if house.status.kind is not StatusKind.AWAITING_COUNTER_DEPOSIT or window is None:
        return
    if world.height > window.deadline_block and not evaluate_criterion_one(
        window.withdrawn_value, window.accumulated_value, house.params.tolerance_bp
    ):
        logger.warning(
            f"Counter-deposit window expired: {format_usd(window.accumulated_value)} of "
            f"{format_usd(window.withdrawn_value)} returned"
        )
        house.window = None
        lock(world, LockReason.WINDOW_EXPIRED)


# Fund shares and NAV


def nav(world: "World") -> int:
    """USD value of everything the fund holds: MAINSC, Safe-House and staked LP."""
    total = 0
    for holder in (MAINSC, SAFEHOUSE):
        for asset, qty in world.ledger.holdings(holder).items():
            if asset == world.fund_asset:
                continue
            value = quote_value(world, asset, qty)
            if value is None:
                logger.debug(f"NAV skips unpriced {asset}")
                continue
            total += value
    for position in world.staking.positions.values():
        value = quote_value(world, position.lp_token, position.staked)
        total += value or 0
    return total


def fund_share_state(world: "World") -> FundShareState:
    return FundShareState(total_shares=world.ledger.total_supply(world.fund_asset), nav=nav(world))


def _stable_qty_for(world: "World", usd: int) -> int:
    return usd * TOKEN // live_price(world, world.stable_asset)


def add_to_whitelist(world: "World", addr: Address) -> WhitelistEntry:
    entry = world.safehouse.whitelist.get(addr)
    if entry is None:
        entry = WhitelistEntry(addr, world.height)
        world.safehouse.whitelist[addr] = entry
        logger.debug(f"Whitelisted {world.label(addr)} at block {world.height}")
    return entry


# Investor flows


def investor_deposit(world: "World", investor: Address, stable_amt: int) -> int:
    """Move stable tokens into MAINSC and mint fund tokens at the current share price.

    Returns:
        Fund tokens minted

    Raises:
        ZeroAmount: If stable_amt is zero
        InsufficientBalance: If the investor holds too little stable
    """
    fields_ = {"amount": format_amount(stable_amt)}
    with world.recording(investor, MAINSC, "investor_deposit", fields_) as call:
        if stable_amt == 0:
            raise ZeroAmount("deposit amount must be positive")
        value = value_of(live_price(world, world.stable_asset), stable_amt)
        if value == 0:
            raise ZeroAmount("deposit is worth nothing at the current stable price")
        shares = fund_share_state(world)
        if shares.total_shares == 0:
            minted = value * TOKEN // USD
        else:
            if shares.nav == 0:
                raise ZeroNav("fund has shares outstanding but no valued holdings")
            minted = value * shares.total_shares // shares.nav
        world.ledger.transfer(investor, MAINSC, world.stable_asset, stable_amt)
        world.ledger.mint(investor, world.fund_asset, minted)
        add_to_whitelist(world, investor)
        house = world.safehouse
        house.net_deposits[investor] = house.net_deposits.get(investor, 0) + value
        call.message = f"minted {minted}"
        logger.info(
            f"{world.label(investor)} deposited {format_usd(value)} USD for {minted} fund units"
        )
        return minted


def flag_check(world: "World", target: Address, value: int) -> FlagResult:
    """Apply the X/Y/Z scrutiny rules to an outflow of `value` USD to target."""
    params = world.params
    house = world.safehouse
    if params.flag_z and house.net_deposits.get(target, 0) < params.flag_z:
        return FlagResult.FLAGGED
    if params.flag_x:
        since = world.height - params.flag_y_blocks
        recent = sum(v for block, addr, v in house.outflows if addr == target and block > since)
        if recent + value > params.flag_x:
            return FlagResult.FLAGGED
    return FlagResult.CLEAR


def _pay_from_mainsc(world: "World", recipient: Address, stable_qty: int) -> None:
    ledger = world.ledger
    stable = world.stable_asset
    held = ledger.balance(MAINSC, stable)
    if held < stable_qty:
        shortfall = stable_qty - held
        if stable in world.oracle.frozen:
            raise FrozenAsset(f"{stable} is frozen; the safe-house cannot top up MAINSC")
        if ledger.balance(SAFEHOUSE, stable) < shortfall:
            raise InsufficientLiquidity(
                f"MAINSC and safe-house together cannot pay {stable_qty} {stable}"
            )
        ledger.transfer(SAFEHOUSE, MAINSC, stable, shortfall)
    ledger.transfer(MAINSC, recipient, stable, stable_qty)


def investor_redeem(world: "World", investor: Address, fund_tokens: int) -> int:
    """Burn fund tokens and pay stable at the current share price.

    A flagged redemption escrows the fund tokens with MAINSC and waits in the
    governance release queue.

    Returns:
        Stable tokens paid

    Raises:
        WhitelistLocked: If the investor is not whitelisted or still time-locked
        InsufficientShares: If the investor holds fewer fund tokens
        Flagged: If the X/Y/Z rules flag the redemption
        InsufficientLiquidity: If MAINSC cannot be topped up enough
        FrozenAsset: If a top-up is needed while the stable asset is frozen
    """
    fields_ = {"shares": format_amount(fund_tokens)}
    with world.recording(investor, MAINSC, "investor_redeem", fields_) as call:
        house = world.safehouse
        ledger = world.ledger
        entry = house.whitelist.get(investor)
        if entry is None:
            raise WhitelistLocked(f"{world.label(investor)} is not whitelisted")
        unlock = entry.added_block + world.params.whitelist_lock_blocks
        if world.height < unlock:
            raise WhitelistLocked(f"{world.label(investor)} may not redeem before block {unlock}")
        if fund_tokens == 0:
            raise ZeroAmount("redeem amount must be positive")
        if ledger.balance(investor, world.fund_asset) < fund_tokens:
            raise InsufficientShares(f"{world.label(investor)} holds too few fund tokens")

        shares = fund_share_state(world)
        value = fund_tokens * shares.nav // shares.total_shares
        payout = _stable_qty_for(world, value)

        if flag_check(world, investor, value) is FlagResult.FLAGGED:
            request = FlaggedRedemption(
                request_id=house.next_flag_id,
                investor=investor,
                shares=fund_tokens,
                payout=payout,
                value=value,
                block=world.height,
            )
            ledger.transfer(investor, MAINSC, world.fund_asset, fund_tokens)
            house.flag_queue[request.request_id] = request
            house.next_flag_id += 1
            house.totals.flags_raised += 1
            logger.warning(
                f"Flagged redemption {request.request_id} of {format_usd(value)} USD "
                f"by {world.label(investor)}"
            )
            raise Flagged(f"redemption queued for release as request {request.request_id}")

        _pay_from_mainsc(world, investor, payout)
        ledger.burn(investor, world.fund_asset, fund_tokens)
        house.outflows.append((world.height, investor, value))
        house.net_deposits[investor] = house.net_deposits.get(investor, 0) - value
        call.message = f"paid {payout}"
        logger.info(f"{world.label(investor)} redeemed {format_usd(value)} USD")
        return payout


def release_flagged(world: "World", request_id: int) -> int:
    """Complete a queued redemption without re-running the flag rules."""
    house = world.safehouse
    request = house.flag_queue.get(request_id)
    if request is None:
        raise UnknownFlagRequest(f"no queued redemption with id {request_id}")
    _pay_from_mainsc(world, request.investor, request.payout)
    world.ledger.burn(MAINSC, world.fund_asset, request.shares)
    del house.flag_queue[request_id]
    house.outflows.append((world.height, request.investor, request.value))
    house.net_deposits[request.investor] = (
        house.net_deposits.get(request.investor, 0) - request.value
    )
    logger.info(f"Released flagged redemption {request_id} to {world.label(request.investor)}")
    return request.payout


def sweep_to_safehouse(world: "World", caller: Address) -> int:
    """Move MAINSC's whole stable balance into the Safe-House.

    Raises:
        NotAManager: If the caller does not hold the Manager role
    """
    with world.recording(caller, MAINSC, "sweep", {}) as call:
        if not world.governance.is_manager(caller):
            raise NotAManager(f"{world.label(caller)} does not hold the Manager role")
        _require_unlocked(world)
        amount = world.ledger.balance(MAINSC, world.stable_asset)
        world.ledger.transfer(MAINSC, SAFEHOUSE, world.stable_asset, amount)
        call.message = f"swept {amount}"
        return amount


# Manager flows


def _require_unlocked(world: "World") -> None:
    status = world.safehouse.status
    if status.kind is StatusKind.LOCKED:
        raise VaultLocked(f"safe-house is {status.render()}")


def _require_holdings(world: "World", basket: Basket) -> None:
    for asset, qty in basket:
        held = world.ledger.balance(SAFEHOUSE, asset)
        if held < qty:
            raise InsufficientHoldings(f"safe-house holds {held} {asset}, basket asks {qty}")


def manager_withdraw(
    world: "World",
    manager: Address,
    basket: Basket,
    otntp_plaintext: str,
    next_commitment: Commitment,
) -> int:
    """Take a basket out of the Safe-House under the OTNTP gate and the max_out cap.

    Only a locked house refuses before the OTNTP is checked. Every later
    refusal (open window, block gap, limits) happens after the password was
    verified and rotated, so a revealed password is never left valid.

    Returns:
        USD value withdrawn

    Raises:
        NotAManager: If the caller does not hold the Manager role
        VaultLocked: If the house is locked
        VaultNotOpen: If a counter-deposit window is open
        TooSoon: If the minimum block gap since the last withdrawal has not passed
        AuthRejected: If the password does not match (counts a failure)
        UnapprovedAsset, FrozenAsset, NoQuotes: If the basket cannot be valued
        LimitExceeded: If the value exceeds max_out or a category cap
        InsufficientHoldings: If the house does not hold the basket
        AllowanceExhausted: If Criterion 2 would be broken (locks the house)
    """
    fields_ = {
        "basket": basket,
        "otntp_plaintext": otntp_plaintext,
        "next_commitment": next_commitment,
    }
    with world.recording(manager, SAFEHOUSE, "manager_withdraw", fields_) as call:
        house = world.safehouse
        params = house.params
        if not world.governance.is_manager(manager):
            raise NotAManager(f"{world.label(manager)} does not hold the Manager role")
        _require_unlocked(world)
        if not _verify_and_rotate(world, manager, otntp_plaintext, next_commitment):
            raise AuthRejected(f"OTNTP rejected, house is {house.status.render()}")

        if house.status.kind is StatusKind.AWAITING_COUNTER_DEPOSIT:
            raise VaultNotOpen("safe-house is awaiting a counter deposit")
        if house.last_withdraw_block is not None:
            earliest = house.last_withdraw_block + params.min_blocks_between_withdrawals
            if world.height < earliest:
                raise TooSoon(f"next withdrawal allowed at block {earliest}")

        values = entry_values(world, basket)
        value = sum(values)
        if value > params.max_out:
            raise LimitExceeded(
                f"withdrawal worth {format_usd(value)} exceeds max_out {format_usd(params.max_out)}"
            )
        for category, total in category_totals(world, basket, values).items():
            cap = params.cap_for(category)
            if cap is not None and total > cap:
                raise LimitExceeded(
                    f"{category} assets worth {format_usd(total)} exceed cap {format_usd(cap)}"
                )
        _require_holdings(world, basket)

        allowance = house.allowance
        if params.criterion_mode is CriterionMode.TWO and not criterion_two_holds(
            allowance.cum_withdrawn + value,
            allowance.cum_deposit_credit,
            params.max_out,
            params.tolerance_bp,
        ):
            lock(world, LockReason.LIMIT_BREACHED)
            raise AllowanceExhausted(
                f"withdrawing {format_usd(value)} would break the running extraction bound"
            )

        for asset, qty in basket:
            world.ledger.transfer(SAFEHOUSE, manager, asset, qty)
        house.last_withdraw_block = world.height
        house.totals.extracted += value

        if params.criterion_mode is CriterionMode.TWO:
            allowance.cum_withdrawn += value
        elif not evaluate_criterion_one(value, 0, params.tolerance_bp):
            house.window = CounterDepositWindow(
                withdrawer=manager,
                opened_block=world.height,
                deadline_block=world.height + params.cd_time_blocks,
                withdrawn_value=value,
            )
            house.status = SafeHouseStatus(StatusKind.AWAITING_COUNTER_DEPOSIT)
        call.message = f"withdrew {format_usd(value)}"
        logger.info(
            f"{world.label(manager)} withdrew {format_usd(value)} USD, "
            f"house {house.status.render()}"
        )
        return value


def counter_deposit(world: "World", depositor: Address, basket: Basket) -> int:
    """Return value to the Safe-House from a Manager or Owner address.

    Returns:
        USD value deposited

    Raises:
        NotAuthorized: If the depositor is neither a Manager nor an Owner
        VaultLocked: If the house is locked
        UnapprovedAsset, FrozenAsset, NoQuotes: If the basket cannot be valued
        InsufficientHoldings: If the depositor does not hold the basket
    """
    with world.recording(depositor, SAFEHOUSE, "counter_deposit", {"basket": basket}) as call:
        house = world.safehouse
        params = house.params
        if not world.governance.is_manager_or_owner(depositor):
            raise NotAuthorized(f"{world.label(depositor)} may not make counter deposits")
        _require_unlocked(world)
        value = value_basket(world, basket)
        for asset, qty in basket:
            if world.ledger.balance(depositor, asset) < qty:
                raise InsufficientHoldings(f"{world.label(depositor)} holds too little {asset}")
        for asset, qty in basket:
            world.ledger.transfer(depositor, SAFEHOUSE, asset, qty)
        house.totals.counter_deposits += value

        if params.criterion_mode is CriterionMode.TWO:
            house.allowance.cum_deposit_credit += min(params.max_out, value)
        elif house.window is not None:
            window = house.window
            window.accumulated_value += value
            if evaluate_criterion_one(
                window.withdrawn_value, window.accumulated_value, params.tolerance_bp
            ):
                house.window = None
                house.status = SafeHouseStatus()
                logger.info(f"Counter deposits satisfied at block {world.height}, house open")
        call.message = f"deposited {format_usd(value)}"
        return value


def net_extracted(world: "World") -> int:
    totals = world.safehouse.totals
    return totals.extracted - totals.counter_deposits


def holdings_value(world: "World", holder: Address = SAFEHOUSE) -> int:
    total = 0
    for asset, qty in world.ledger.holdings(holder).items():
        total += quote_value(world, asset, qty) or 0
    return total

