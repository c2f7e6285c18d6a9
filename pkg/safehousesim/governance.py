"""Owners, managers and threshold-signed governance actions."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Dict, FrozenSet, List, Set, Union

from safehousesim.amounts import format_usd
from safehousesim.errors import (
    AlreadyExecuted,
    InvalidParameter,
    NotAManager,
    NotAnOwner,
    RoleConflict,
    ThresholdNotMet,
    UnknownProposal,
)
from safehousesim.ledger import GOVERNANCE, Address, AssetId
from safehousesim.otntp import auth_state
from safehousesim.safehouse import add_to_whitelist, hold, release_flagged, reopen
from safehousesim.staking import remap_staking_manager
from safehousesim.valuation import ReferencePrice, approve_asset, set_reference_price

if TYPE_CHECKING:
    from safehousesim.world import World

logger = logging.getLogger(__name__)


class Role(Enum):
    OWNER = "owner"
    MANAGER = "manager"
    NONE = "none"


@dataclass(frozen=True)
class OwnerSet:
    owners: FrozenSet[Address]
    threshold: int

    def __post_init__(self):
        if not 1 <= self.threshold <= len(self.owners):
            raise InvalidParameter(
                f"threshold {self.threshold} outside 1..{len(self.owners)} owners"
            )


@dataclass(frozen=True)
class SetParameter:
    name: str
    value: int

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "set_parameter", "name": self.name, "value": self.value}


@dataclass(frozen=True)
class GrantManager:
    address: Address

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "grant_manager", "address": self.address.hex()}


@dataclass(frozen=True)
class SetReferencePrice:
    asset: AssetId
    price: int
    band_bp: int = 1000

    def to_payload(self) -> Dict[str, object]:
        return {
            "kind": "set_reference_price",
            "asset": self.asset.symbol,
            "price": format_usd(self.price),
            "band_bp": self.band_bp,
        }


@dataclass(frozen=True)
class SetReturnAddress:
    address: Address

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "set_return_address", "address": self.address.hex()}


@dataclass(frozen=True)
class ReopenSafeHouse:
    def to_payload(self) -> Dict[str, object]:
        return {"kind": "reopen_safehouse"}


@dataclass(frozen=True)
class HoldSafeHouse:
    def to_payload(self) -> Dict[str, object]:
        return {"kind": "hold_safehouse"}


@dataclass(frozen=True)
class RegisterStakingManager:
    asset: AssetId
    staking_manager: Address

    def to_payload(self) -> Dict[str, object]:
        return {
            "kind": "register_staking_manager",
            "asset": self.asset.symbol,
            "staking_manager": self.staking_manager.hex(),
        }


@dataclass(frozen=True)
class AddToWhitelist:
    address: Address

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "add_to_whitelist", "address": self.address.hex()}


@dataclass(frozen=True)
class AddApprovedAsset:
    asset: AssetId
    category: str

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "add_approved_asset", "asset": self.asset.symbol, "category": self.category}


@dataclass(frozen=True)
class SetCategoryCap:
    category: str
    cap: int

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "set_category_cap", "category": self.category, "cap": format_usd(self.cap)}


@dataclass(frozen=True)
class ReleaseFlagged:
    request_id: int

    def to_payload(self) -> Dict[str, object]:
        return {"kind": "release_flagged", "request_id": self.request_id}


GovernanceAction = Union[
    SetParameter,
    GrantManager,
    SetReferencePrice,
    SetReturnAddress,
    ReopenSafeHouse,
    HoldSafeHouse,
    RegisterStakingManager,
    AddToWhitelist,
    AddApprovedAsset,
    SetCategoryCap,
    ReleaseFlagged,
]


@dataclass
class Proposal:
    id: int
    action: GovernanceAction
    signatures: Set[Address]
    executed: bool = False
    created_block: int = 0


@dataclass
class GovernanceState:
    owners: OwnerSet
    managers: Dict[Address, int] = field(default_factory=dict)
    proposals: List[Proposal] = field(default_factory=list)

    def role_of(self, addr: Address) -> Role:
        if addr in self.owners.owners:
            return Role.OWNER
        if addr in self.managers:
            return Role.MANAGER
        return Role.NONE

    def is_owner(self, addr: Address) -> bool:
        return addr in self.owners.owners

    def is_manager(self, addr: Address) -> bool:
        return addr in self.managers

    def is_manager_or_owner(self, addr: Address) -> bool:
        return self.is_owner(addr) or self.is_manager(addr)


def _require_owner(world: "World", caller: Address) -> None:
    if not world.governance.is_owner(caller):
        raise NotAnOwner(f"{world.label(caller)} is not an owner")


def _proposal(world: "World", proposal_id: int) -> Proposal:
    proposals = world.governance.proposals
    if not 0 <= proposal_id < len(proposals):
        raise UnknownProposal(f"no proposal with id {proposal_id}")
    return proposals[proposal_id]


def grant_manager(world: "World", addr: Address) -> None:
    """Give addr the Manager role; it must seed an OTNTP commitment before withdrawing."""
    governance = world.governance
    if governance.is_owner(addr):
        raise RoleConflict(f"{world.label(addr)} is an owner and cannot also manage")
    if addr == world.staking.registry.return_address:
        raise RoleConflict(f"{world.label(addr)} is the staking return address")
    if addr not in governance.managers:
        governance.managers[addr] = world.height
        auth_state(world, addr)
        logger.info(f"Granted Manager role to {world.label(addr)}")


def propose(world: "World", owner: Address, action: GovernanceAction) -> int:
    """Open a proposal carrying the proposer's signature.

    Raises:
        NotAnOwner: If the caller is not an owner
    """
    with world.recording(owner, GOVERNANCE, "propose", {"action": action}) as call:
        _require_owner(world, owner)
        proposal = Proposal(
            id=len(world.governance.proposals),
            action=action,
            signatures={owner},
            created_block=world.height,
        )
        world.governance.proposals.append(proposal)
        call.message = f"proposal {proposal.id}"
        return proposal.id


def sign(world: "World", owner: Address, proposal_id: int) -> int:
    """Add an owner's signature; signing twice is a no-op.

    Returns:
        Number of distinct signatures
    """
    with world.recording(owner, GOVERNANCE, "sign", {"proposal": proposal_id}) as call:
        _require_owner(world, owner)
        proposal = _proposal(world, proposal_id)
        if proposal.executed:
            raise AlreadyExecuted(f"proposal {proposal_id} was already executed")
        proposal.signatures.add(owner)
        call.message = f"{len(proposal.signatures)} signatures"
        return len(proposal.signatures)


def _apply_set_parameter(world: "World", action: SetParameter) -> None:
    world.safehouse.params = world.safehouse.params.with_parameter(action.name, action.value)


def _apply_set_reference_price(world: "World", action: SetReferencePrice) -> None:
    if action.price <= 0 or action.band_bp < 0:
        raise InvalidParameter("reference price must be positive and band non-negative")
    set_reference_price(world, ReferencePrice(action.asset, action.price, action.band_bp))


def _apply_set_return_address(world: "World", action: SetReturnAddress) -> None:
    if world.governance.is_manager(action.address):
        raise RoleConflict(f"{world.label(action.address)} is a manager")
    world.staking.registry.return_address = action.address


def _apply_register_staking_manager(world: "World", action: RegisterStakingManager) -> None:
    remap_staking_manager(world, action.asset, action.staking_manager)


def _apply_add_to_whitelist(world: "World", action: AddToWhitelist) -> None:
    add_to_whitelist(world, action.address)


def _apply_add_approved_asset(world: "World", action: AddApprovedAsset) -> None:
    approve_asset(world, action.asset, action.category)


def _apply_set_category_cap(world: "World", action: SetCategoryCap) -> None:
    params = world.safehouse.params
    world.safehouse.params = params.with_category_cap(action.category, action.cap)


def _apply_reopen(world: "World", action: ReopenSafeHouse) -> None:
    reopen(world)


def _apply_hold(world: "World", action: HoldSafeHouse) -> None:
    hold(world)


def _apply_release_flagged(world: "World", action: ReleaseFlagged) -> None:
    release_flagged(world, action.request_id)


_HANDLERS: Dict[type, Callable] = {
    SetParameter: _apply_set_parameter,
    GrantManager: lambda world, action: grant_manager(world, action.address),
    SetReferencePrice: _apply_set_reference_price,
    SetReturnAddress: _apply_set_return_address,
    ReopenSafeHouse: _apply_reopen,
    HoldSafeHouse: _apply_hold,
    RegisterStakingManager: _apply_register_staking_manager,
    AddToWhitelist: _apply_add_to_whitelist,
    AddApprovedAsset: _apply_add_approved_asset,
    SetCategoryCap: _apply_set_category_cap,
    ReleaseFlagged: _apply_release_flagged,
}


def execute(world: "World", caller: Address, proposal_id: int) -> None:
    """Apply a proposal's action once enough owners have signed.

    Raises:
        UnknownProposal: If the id does not exist
        AlreadyExecuted: If the proposal already ran
        ThresholdNotMet: If fewer than threshold owners signed
    """
    with world.recording(caller, GOVERNANCE, "execute", {"proposal": proposal_id}):
        proposal = _proposal(world, proposal_id)
        if proposal.executed:
            raise AlreadyExecuted(f"proposal {proposal_id} was already executed")
        owners = world.governance.owners
        signed = len(proposal.signatures & owners.owners)
        if signed < owners.threshold:
            raise ThresholdNotMet(f"{signed} of {owners.threshold} required signatures")
        _HANDLERS[type(proposal.action)](world, proposal.action)
        proposal.executed = True
        logger.info(
            f"Executed proposal {proposal_id} ({proposal.action.to_payload()['kind']}) "
            f"with {signed} signatures"
        )


def revoke_manager(world: "World", owner: Address, manager: Address) -> None:
    """Strip the Manager role immediately; any single owner may do this.

    Raises:
        NotAnOwner: If the caller is not an owner
        NotAManager: If the target holds no Manager role
    """
    with world.recording(owner, GOVERNANCE, "revoke_manager", {"manager": manager}):
        _require_owner(world, owner)
        if not world.governance.is_manager(manager):
            raise NotAManager(f"{world.label(manager)} does not hold the Manager role")
        del world.governance.managers[manager]
        world.auth.pop(manager, None)
        logger.warning(f"{world.label(owner)} revoked manager {world.label(manager)}")
