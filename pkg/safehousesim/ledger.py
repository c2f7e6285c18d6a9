"""Deterministic simulated chain: block clock, token balances and the public call log."""

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

from safehousesim.amounts import ceil_div, checked, checked_add, checked_sub
from safehousesim.errors import InsufficientBalance

logger = logging.getLogger(__name__)

DEFAULT_SECONDS_PER_BLOCK = 15
MAX_SYMBOL_LENGTH = 16


@dataclass(frozen=True, order=True)
class Address:
    """Opaque 20-byte account identifier."""

    raw: bytes

    def __post_init__(self):
        if len(self.raw) != 20:
            raise ValueError(f"address must be 20 bytes, got {len(self.raw)}")

    @classmethod
    def from_label(cls, label: str) -> "Address":
        """Derive a stable address from a human-readable actor label."""
        digest = hashlib.sha256(f"safehousesim:address:{label}".encode("utf-8")).digest()
        return cls(digest[:20])

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        text = text.lower()
        if text.startswith("0x"):
            text = text[2:]
        return cls(bytes.fromhex(text))

    def hex(self) -> str:
        return self.raw.hex()

    def to_payload(self) -> str:
        return self.hex()

    def __str__(self) -> str:
        return self.hex()


@dataclass(frozen=True, order=True)
class AssetId:
    """Token symbol, unique within a world."""

    symbol: str

    def __post_init__(self):
        if not self.symbol or len(self.symbol) > MAX_SYMBOL_LENGTH:
            raise ValueError(
                f"asset symbol must be 1-{MAX_SYMBOL_LENGTH} characters: '{self.symbol}'"
            )

    def to_payload(self) -> str:
        return self.symbol

    def __str__(self) -> str:
        return self.symbol


@dataclass
class BlockClock:
    """Discrete chain time; the only clock in a world."""

    height: int = 0
    seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK

    def __post_init__(self):
        if self.seconds_per_block <= 0:
            raise ValueError("seconds_per_block must be positive")

    def tick(self) -> int:
        self.height += 1
        return self.height

    def blocks_for_seconds(self, seconds: int) -> int:
        """Convert a duration to whole blocks, rounding up."""
        return ceil_div(seconds, self.seconds_per_block)


@dataclass(frozen=True)
class Outcome:
    success: bool
    message: str

    @classmethod
    def ok(cls, message: str = "ok") -> "Outcome":
        return cls(True, message)

    @classmethod
    def failed(cls, message: str) -> "Outcome":
        return cls(False, message)


@dataclass(frozen=True)
class TxRecord:
    """One entry of the public, append-only call log."""

    index: int
    block: int
    caller: Address
    target: Address
    call_name: str
    input_payload: bytes
    outcome: Outcome

    def payload_fields(self) -> Dict[str, Any]:
        """Decode the canonical JSON payload back into a dictionary."""
        if not self.input_payload:
            return {}
        return json.loads(self.input_payload.decode("utf-8"))

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "block": self.block,
                "caller": self.caller.hex(),
                "target": self.target.hex(),
                "call_name": self.call_name,
                "input_payload_hex": self.input_payload.hex(),
                "outcome": {"success": self.outcome.success, "message": self.outcome.message},
            },
            separators=(",", ":"),
        )


def _payload_default(value: Any) -> Any:
    if hasattr(value, "to_payload"):
        return value.to_payload()
    if isinstance(value, bytes):
        return value.hex()
    raise TypeError(f"cannot encode {type(value).__name__} into a call payload")


def encode_payload(fields: Mapping[str, Any]) -> bytes:
    """Canonical JSON encoding of call inputs, as stored on the public log."""
    return json.dumps(
        dict(fields), sort_keys=True, separators=(",", ":"), default=_payload_default
    ).encode("utf-8")


class Ledger:
    """Token balances, block clock and the public transaction log of one world."""

    def __init__(self, seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK):
        self.clock = BlockClock(seconds_per_block=seconds_per_block)
        self._balances: Dict[Tuple[Address, AssetId], int] = {}
        self._supply: Dict[AssetId, int] = {}
        self._log: List[TxRecord] = []

    @property
    def height(self) -> int:
        return self.clock.height

    def balance(self, holder: Address, asset: AssetId) -> int:
        return self._balances.get((holder, asset), 0)

    def holdings(self, holder: Address) -> Dict[AssetId, int]:
        """Non-zero balances of holder, ordered by symbol."""
        found = {
            asset: amount
            for (owner, asset), amount in self._balances.items()
            if owner == holder and amount > 0
        }
        return dict(sorted(found.items()))

    def total_supply(self, asset: AssetId) -> int:
        return self._supply.get(asset, 0)

    def transfer(self, sender: Address, recipient: Address, asset: AssetId, amount: int) -> None:
        """Move amount of asset between holders; global supply is unchanged.

        Raises:
            InsufficientBalance: If sender holds less than amount
        """
        checked(amount)
        available = self.balance(sender, asset)
        if available < amount:
            raise InsufficientBalance(
                f"{sender} holds {available} {asset}, needs {amount}"
            )
        if amount == 0 or sender == recipient:
            return
        self._balances[(sender, asset)] = available - amount
        self._balances[(recipient, asset)] = checked_add(self.balance(recipient, asset), amount)

    def mint(self, recipient: Address, asset: AssetId, amount: int) -> None:
        """Issue new units; used by protocol components (fund shares, LP, rewards)."""
        checked(amount)
        self._supply[asset] = checked_add(self.total_supply(asset), amount)
        self._balances[(recipient, asset)] = checked_add(self.balance(recipient, asset), amount)

    def burn(self, holder: Address, asset: AssetId, amount: int) -> None:
        checked(amount)
        available = self.balance(holder, asset)
        if available < amount:
            raise InsufficientBalance(f"{holder} holds {available} {asset}, burns {amount}")
        self._balances[(holder, asset)] = available - amount
        self._supply[asset] = checked_sub(self.total_supply(asset), amount)

    def seed_balance(self, holder: Address, asset: AssetId, amount: int) -> None:
        """Test-setup minting; never reachable from scenario events."""
        logger.debug(f"Seeding {amount} {asset} to {holder}")
        self.mint(holder, asset, amount)

    def record_call(
        self,
        caller: Address,
        target: Address,
        call_name: str,
        input_payload: bytes,
        outcome: Optional[Outcome] = None,
    ) -> TxRecord:
        """Append a call to the public log at the current height."""
        record = TxRecord(
            index=len(self._log),
            block=self.height,
            caller=caller,
            target=target,
            call_name=call_name,
            input_payload=bytes(input_payload),
            outcome=outcome or Outcome.ok(),
        )
        self._log.append(record)
        return record

    def public_log(self) -> Tuple[TxRecord, ...]:
        """Every recorded call; readable by any party."""
        return tuple(self._log)

    def export_jsonl(self) -> str:
        return "".join(record.to_json_line() + "\n" for record in self._log)

    def log_digest(self) -> str:
        return hashlib.sha256(self.export_jsonl().encode("utf-8")).hexdigest()


MAINSC_LABEL = "MAINSC"
SAFEHOUSE_LABEL = "SAFEHOUSE"
GOVERNANCE_LABEL = "GOVERNANCE"
ORACLE_LABEL = "ORACLE"
PLATFORM_LABEL = "PLATFORM"

SYSTEM_LABELS = (MAINSC_LABEL, SAFEHOUSE_LABEL, GOVERNANCE_LABEL, ORACLE_LABEL, PLATFORM_LABEL)

# Contract addresses every deployment shares.
MAINSC = Address.from_label(MAINSC_LABEL)
SAFEHOUSE = Address.from_label(SAFEHOUSE_LABEL)
GOVERNANCE = Address.from_label(GOVERNANCE_LABEL)
ORACLE = Address.from_label(ORACLE_LABEL)
PLATFORM = Address.from_label(PLATFORM_LABEL)
