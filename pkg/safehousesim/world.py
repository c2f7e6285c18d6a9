"""Composition root: one world owns the ledger and every protocol component's state."""

import copy
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Mapping, Optional

from safehousesim.errors import SafeHouseError
from safehousesim.governance import GovernanceState, OwnerSet
from safehousesim.ledger import (
    DEFAULT_SECONDS_PER_BLOCK,
    SAFEHOUSE,
    SYSTEM_LABELS,
    Address,
    AssetId,
    Ledger,
    Outcome,
    encode_payload,
)
from safehousesim.otntp import AuthState
from safehousesim.rng import SplitMix64
from safehousesim.safehouse import SafeHouseParams, SafeHouseState, on_block_tick
from safehousesim.staking import SMRegistry, StakingState
from safehousesim.valuation import OracleState

logger = logging.getLogger(__name__)


@dataclass
class CallOutcome:
    """Mutable outcome of a call in progress; fail() marks it rejected without raising."""

    success: bool = True
    message: str = "ok"

    def fail(self, message: str) -> None:
        self.success = False
        self.message = message

    def to_outcome(self) -> Outcome:
        return Outcome(self.success, self.message)


class World:
    """A single-writer simulated chain hosting one Safe-House deployment.

    Every public operation in the protocol modules takes a world as its first
    argument and mutates it in place; `snapshot()` gives an independent copy
    for what-if evaluation.
    """

    def __init__(
        self,
        owners: OwnerSet,
        params: Optional[SafeHouseParams] = None,
        seed: int = 0,
        seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK,
        stable_asset: AssetId = AssetId("USDS"),
        fund_asset: AssetId = AssetId("FUND"),
    ):
        self.seed = seed
        self.rng = SplitMix64(seed)
        self.ledger = Ledger(seconds_per_block=seconds_per_block)
        self.stable_asset = stable_asset
        self.fund_asset = fund_asset
        self.governance = GovernanceState(owners=owners)
        self.auth: Dict[Address, AuthState] = {}
        self.oracle = OracleState()
        self.oracle.par_assets.add(stable_asset)
        self.safehouse = SafeHouseState(params=params or SafeHouseParams())
        self.staking = StakingState(registry=SMRegistry(return_address=SAFEHOUSE))
        self._labels: Dict[Address, str] = {}
        for label in SYSTEM_LABELS:
            self.address(label)

    @property
    def height(self) -> int:
        return self.ledger.height

    @property
    def params(self) -> SafeHouseParams:
        return self.safehouse.params

    def address(self, label: str) -> Address:
        """Address for an actor label; remembers the label for rendering."""
        addr = Address.from_label(label)
        self._labels[addr] = label
        return addr

    def label(self, addr: Address) -> str:
        return self._labels.get(addr, addr.hex())

    def advance_blocks(self, n: int) -> int:
        """Move the clock forward n blocks, running deadline checks at every crossed block."""
        if n < 0:
            raise ValueError(f"cannot advance by a negative block count: {n}")
        for _ in range(n):
            self.ledger.clock.tick()
            on_block_tick(self)
        return self.height

    @contextmanager
    def recording(
        self, caller: Address, target: Address, call_name: str, fields: Mapping[str, Any]
    ) -> Iterator[CallOutcome]:
        """Record a call on the public log with its outcome, raised errors included."""
        payload = encode_payload(fields)
        call = CallOutcome()
        try:
            yield call
        except SafeHouseError as e:
            message = f"{type(e).__name__}: {e}"
            self.ledger.record_call(caller, target, call_name, payload, Outcome.failed(message))
            logger.debug(f"{call_name} by {self.label(caller)} failed: {message}")
            raise
        self.ledger.record_call(caller, target, call_name, payload, call.to_outcome())
        logger.debug(f"{call_name} by {self.label(caller)}: {call.message}")

    def snapshot(self) -> "World":
        return copy.deepcopy(self)
