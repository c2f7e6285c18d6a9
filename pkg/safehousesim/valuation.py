"""Oracle prices, the reference-price guard and basket valuation."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterator, List, Mapping, Optional, Set, Tuple

from safehousesim.amounts import USD, checked, format_amount, format_usd, value_of
from safehousesim.errors import (
    DuplicateAsset,
    FrozenAsset,
    InvalidParameter,
    NoHistory,
    NoQuotes,
    NoReference,
    NotAuthorized,
    UnapprovedAsset,
    UnknownFeed,
)
from safehousesim.ledger import ORACLE, Address, AssetId

if TYPE_CHECKING:
    from safehousesim.world import World

logger = logging.getLogger(__name__)

DEFAULT_BAND_BP = 1000


@dataclass(frozen=True)
class PriceQuote:
    asset: AssetId
    price: int
    source: str
    block: int

    def __post_init__(self):
        if self.price <= 0:
            raise ValueError(f"quote price must be positive, got {self.price}")


@dataclass(frozen=True)
class ReferencePrice:
    """Governance-set price and the deviation band outside which an asset freezes."""

    asset: AssetId
    price: int
    band_bp: int = DEFAULT_BAND_BP

    def to_payload(self) -> Dict[str, object]:
        return {
            "asset": self.asset.symbol,
            "price": format_usd(self.price),
            "band_bp": self.band_bp,
        }


class GuardResult(Enum):
    PASS = "pass"
    FREEZE = "freeze"


@dataclass(frozen=True)
class Basket:
    """Distinct (asset, quantity) pairs valued as one withdrawal or deposit."""

    entries: Tuple[Tuple[AssetId, int], ...] = ()

    def __post_init__(self):
        seen: Set[AssetId] = set()
        for asset, qty in self.entries:
            if asset in seen:
                raise DuplicateAsset(f"asset {asset} appears twice in a basket")
            seen.add(asset)
            checked(qty)

    @classmethod
    def of(cls, quantities: Mapping[AssetId, int]) -> "Basket":
        return cls(tuple(quantities.items()))

    def __iter__(self) -> Iterator[Tuple[AssetId, int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def assets(self) -> List[AssetId]:
        return [asset for asset, _ in self.entries]

    def to_payload(self) -> List[List[str]]:
        return [[asset.symbol, format_amount(qty)] for asset, qty in self.entries]


@dataclass
class OracleState:
    feeds: Set[str] = field(default_factory=set)
    quotes: Dict[AssetId, Dict[str, List[PriceQuote]]] = field(default_factory=dict)
    history: Dict[AssetId, List[Tuple[int, int]]] = field(default_factory=dict)
    observations: Dict[AssetId, List[Tuple[int, int]]] = field(default_factory=dict)
    references: Dict[AssetId, ReferencePrice] = field(default_factory=dict)
    frozen: Set[AssetId] = field(default_factory=set)
    approved: Dict[AssetId, str] = field(default_factory=dict)
    par_assets: Set[AssetId] = field(default_factory=set)


def feed_address(feed_id: str) -> Address:
    return Address.from_label(f"feed:{feed_id}")


def register_feed(world: "World", feed_id: str) -> None:
    world.oracle.feeds.add(feed_id)
    world.address(f"feed:{feed_id}")


def approve_asset(world: "World", asset: AssetId, category: str) -> None:
    """Put an asset on the approved list under a withdrawal-cap category."""
    world.oracle.approved[asset] = category
    logger.info(f"Approved asset {asset} (category '{category}')")


def set_reference_price(world: "World", reference: ReferencePrice) -> None:
    """Install a governance reference price; clears any freeze on the asset."""
    world.oracle.references[reference.asset] = reference
    if reference.asset in world.oracle.frozen:
        world.oracle.frozen.discard(reference.asset)
        logger.info(f"Unfroze {reference.asset} under new reference {format_usd(reference.price)}")


def _record_history(world: "World", asset: AssetId, price: int) -> None:
    entries = world.oracle.history.setdefault(asset, [])
    if entries and entries[-1][0] == world.height:
        entries[-1] = (world.height, price)
    else:
        entries.append((world.height, price))


def push_quote(world: "World", feed_id: str, asset: AssetId, price: int) -> PriceQuote:
    """Publish a feed quote and append the new aggregate to the asset's history.

    Raises:
        UnknownFeed: If feed_id was never registered
        InvalidParameter: If price is not positive
    """
    caller = feed_address(feed_id)
    fields = {"feed": feed_id, "asset": asset, "price": format_usd(price)}
    with world.recording(caller, ORACLE, "feed_quote", fields):
        if feed_id not in world.oracle.feeds:
            raise UnknownFeed(f"feed '{feed_id}' is not registered")
        if price <= 0:
            raise InvalidParameter(f"quote price must be positive, got {price}")
        quote = PriceQuote(asset=asset, price=price, source=feed_id, block=world.height)
        world.oracle.quotes.setdefault(asset, {}).setdefault(feed_id, []).append(quote)
        _record_history(world, asset, aggregate_price(world, asset))
        return quote


def observe_price(world: "World", observer: Address, asset: AssetId, price: int) -> None:
    """Log an observed price (e.g. a pool spot price) for the asset.

    Observations are kept apart from the feed aggregates in `history`; no
    valuation path reads them.

    Raises:
        NotAuthorized: If the observer is neither a Manager nor an Owner
    """
    fields = {"asset": asset, "price": format_usd(price)}
    with world.recording(observer, ORACLE, "observe_price", fields):
        if not world.governance.is_manager_or_owner(observer):
            raise NotAuthorized(f"{world.label(observer)} may not publish price observations")
        if price <= 0:
            raise InvalidParameter(f"observed price must be positive, got {price}")
        world.oracle.observations.setdefault(asset, []).append((world.height, price))


def _median(prices: List[int]) -> int:
    ordered = sorted(prices)
    middle = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[middle]
    return (ordered[middle - 1] + ordered[middle]) // 2


def aggregate_price(
    world: "World", asset: AssetId, at_block: Optional[int] = None, max_age_blocks: int = 0
) -> int:
    """Median of the latest quote of every feed that has quoted the asset.

    Args:
        world: World holding the quotes
        asset: Asset to price
        at_block: Ignore quotes after this height (defaults to the current height)
        max_age_blocks: Ignore quotes older than this many blocks; 0 keeps all

    Raises:
        NoQuotes: If no feed has a usable quote
    """
    height = world.height if at_block is None else at_block
    latest: List[int] = []
    for feed_quotes in world.oracle.quotes.get(asset, {}).values():
        usable = [q for q in feed_quotes if q.block <= height]
        if not usable:
            continue
        quote = usable[-1]
        if max_age_blocks and height - quote.block > max_age_blocks:
            continue
        latest.append(quote.price)
    if not latest:
        raise NoQuotes(f"no feed quotes for {asset} at block {height}")
    return _median(latest)


def moving_average_default(
    world: "World", asset: AssetId, window: int, at_block: Optional[int] = None
) -> int:
    """Floor mean of the recorded prices in the trailing window (height - window, height].

    Raises:
        NoHistory: If no price was recorded inside the window
    """
    height = world.height if at_block is None else at_block
    prices = [
        price
        for block, price in world.oracle.history.get(asset, [])
        if height - window < block <= height
    ]
    if not prices:
        raise NoHistory(f"no recorded prices for {asset} in the last {window} blocks")
    return sum(prices) // len(prices)


def live_price(world: "World", asset: AssetId) -> int:
    """Current price: fresh feed median, else trailing moving average, else par for stables."""
    params = world.params
    try:
        return aggregate_price(world, asset, max_age_blocks=params.quote_max_age_blocks)
    except NoQuotes:
        pass
    try:
        price = moving_average_default(world, asset, params.ma_window_blocks)
        logger.debug(f"Using moving-average price {format_usd(price)} for {asset}")
        return price
    except NoHistory:
        pass
    if asset in world.oracle.par_assets:
        return USD
    raise NoQuotes(f"no live or historical price for {asset}")


def reference_guard(world: "World", asset: AssetId, price: int) -> GuardResult:
    """Compare a price with the governance reference; freezes the asset on divergence.

    Raises:
        NoReference: If governance never set a reference price for the asset
    """
    reference = world.oracle.references.get(asset)
    if reference is None:
        raise NoReference(f"no reference price for {asset}")
    if abs(price - reference.price) * 10_000 > reference.price * reference.band_bp:
        if asset not in world.oracle.frozen:
            world.oracle.frozen.add(asset)
            logger.warning(
                f"Froze {asset}: price {format_usd(price)} outside "
                f"{reference.band_bp}bp of reference {format_usd(reference.price)}"
            )
        return GuardResult.FREEZE
    return GuardResult.PASS


def _guarded_price(world: "World", asset: AssetId) -> int:
    if asset in world.oracle.frozen:
        raise FrozenAsset(f"{asset} is frozen until governance updates its reference")
    price = live_price(world, asset)
    if asset in world.oracle.references:
        if reference_guard(world, asset, price) is GuardResult.FREEZE:
            raise FrozenAsset(f"{asset} price {format_usd(price)} diverges from its reference")
    return price


def _lp_value(world: "World", lp_token: AssetId, qty: int, guarded: bool) -> int:
    pool = world.staking.pool_for_lp(lp_token)
    assert pool is not None
    if pool.lp_supply == 0:
        return 0
    price = _guarded_price if guarded else live_price
    share_a = pool.reserve_a * qty // pool.lp_supply
    share_b = pool.reserve_b * qty // pool.lp_supply
    return value_of(price(world, pool.asset_a), share_a) + value_of(
        price(world, pool.asset_b), share_b
    )


def entry_values(world: "World", basket: Basket) -> List[int]:
    """Per-entry USD values of a basket, in entry order.

    Raises:
        UnapprovedAsset: If any asset is off the approved list
        FrozenAsset: If any asset is frozen or its price breaks the reference band
        NoQuotes: If an asset cannot be priced
    """
    for asset in basket.assets():
        if asset not in world.oracle.approved:
            raise UnapprovedAsset(f"{asset} is not on the approved asset list")
    values = []
    for asset, qty in basket:
        if qty == 0:
            values.append(0)
        elif world.staking.pool_for_lp(asset) is not None:
            values.append(_lp_value(world, asset, qty, guarded=True))
        else:
            values.append(value_of(_guarded_price(world, asset), qty))
    return values


def value_basket(world: "World", basket: Basket) -> int:
    """Total USD value of a basket: sum of floor(price * qty / 10**18) per entry."""
    return checked(sum(entry_values(world, basket)))


def quote_value(world: "World", asset: AssetId, qty: int) -> Optional[int]:
    """Unguarded value used for NAV; None when the asset has no price at all."""
    if qty == 0:
        return 0
    try:
        if world.staking.pool_for_lp(asset) is not None:
            return _lp_value(world, asset, qty, guarded=False)
        return value_of(live_price(world, asset), qty)
    except NoQuotes:
        return None


def category_totals(world: "World", basket: Basket, values: List[int]) -> Dict[str, int]:
    totals: Dict[str, int] = {}
    for (asset, _), value in zip(basket, values):
        category = world.oracle.approved[asset]
        totals[category] = totals.get(category, 0) + value
    return totals
