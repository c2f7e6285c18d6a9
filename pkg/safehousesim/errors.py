"""Exception hierarchy for the Safe-House simulator.

Every failure a world operation can raise derives from ``SafeHouseError`` so
callers (the scenario runner, the CLI) can record or report it uniformly.
"""


class SafeHouseError(Exception):
    """Base class for every failure raised by a world operation."""

    pass


# Ledger


class AmountOverflow(SafeHouseError):
    """Raised when an amount leaves the unsigned 128-bit range."""


class InsufficientBalance(SafeHouseError):
    """Raised when a holder cannot cover a transfer."""


# Governance


class NotAnOwner(SafeHouseError):
    """Raised when a non-owner attempts an owner-only call."""


class NotAManager(SafeHouseError):
    """Raised when an address without the Manager role attempts a manager call."""


class NotAuthorized(SafeHouseError):
    """Raised when the caller holds neither the Manager nor the Owner role."""


class RoleConflict(SafeHouseError):
    """Raised when an address would end up holding two roles."""


class UnknownProposal(SafeHouseError):
    """Raised when a proposal id does not exist."""


class AlreadyExecuted(SafeHouseError):
    """Raised when a proposal is signed or executed after execution."""


class ThresholdNotMet(SafeHouseError):
    """Raised when a proposal lacks enough owner signatures."""


class UnknownParameter(SafeHouseError):
    """Raised when a governance action names a field SafeHouseParams lacks."""


class InvalidParameter(SafeHouseError):
    """Raised when a parameter value is out of range or immutable."""


# OTNTP


class AlreadySeeded(SafeHouseError):
    """Raised when a manager that already holds a commitment seeds again."""


class NotSeeded(SafeHouseError):
    """Raised when a manager verifies before seeding a commitment."""


class LengthTooShort(SafeHouseError):
    """Raised when a generated password would be shorter than allowed."""


class EmptyPlaintext(SafeHouseError):
    """Raised when sealing an empty protected file."""


class MacMismatch(SafeHouseError):
    """Raised when a protected file fails authentication."""


class Malformed(SafeHouseError):
    """Raised when protected file bytes do not follow the binary layout."""


# Valuation


class NoQuotes(SafeHouseError):
    """Raised when no feed has quoted an asset."""


class NoHistory(SafeHouseError):
    """Raised when no aggregated price falls inside the averaging window."""


class NoReference(SafeHouseError):
    """Raised when an asset has no governance reference price."""


class UnknownFeed(SafeHouseError):
    """Raised when a quote arrives from an unregistered feed."""


class UnapprovedAsset(SafeHouseError):
    """Raised when a basket holds an asset outside the approved list."""


class FrozenAsset(SafeHouseError):
    """Raised when a basket holds an asset frozen by the reference guard."""


class DuplicateAsset(SafeHouseError):
    """Raised when a basket lists the same asset twice."""


# Safe-house


class ZeroAmount(SafeHouseError):
    """Raised when an operation requires a positive amount."""


class ZeroNav(SafeHouseError):
    """Raised when shares are outstanding but the fund holds no value."""


class WhitelistLocked(SafeHouseError):
    """Raised when a redemption precedes the address's whitelist unlock."""


class Flagged(SafeHouseError):
    """Raised when a redemption is queued for multi-sig release."""


class UnknownFlagRequest(SafeHouseError):
    """Raised when releasing a flag request that is missing or settled."""


class InsufficientShares(SafeHouseError):
    """Raised when an investor redeems more fund tokens than held."""


class InsufficientLiquidity(SafeHouseError):
    """Raised when MAINSC and the safe-house together cannot pay a redemption."""


class VaultNotOpen(SafeHouseError):
    """Raised when a manager withdrawal finds the safe-house not OPEN."""


class VaultLocked(VaultNotOpen):
    """Raised when the safe-house is LOCKED."""


class AuthRejected(SafeHouseError):
    """Raised when the submitted OTNTP does not match the stored commitment."""


class LimitExceeded(SafeHouseError):
    """Raised when a withdrawal is valued above max_out or a category cap."""


class AllowanceExhausted(SafeHouseError):
    """Raised when a withdrawal would break the cumulative allowance bound."""


class TooSoon(SafeHouseError):
    """Raised when withdrawals are closer than the minimum block gap."""


class InsufficientHoldings(SafeHouseError):
    """Raised when the safe-house does not hold the requested assets."""


# Staking


class UnknownInstruction(SafeHouseError):
    """Raised when an instruction id has no registered route."""


class UnknownStakingManager(SafeHouseError):
    """Raised when a registry entry names an undeployed staking manager."""


class NonProportional(SafeHouseError):
    """Raised when liquidity is added off the pool's reserve ratio."""


class InsufficientLP(SafeHouseError):
    """Raised when removing more LP than the pool has issued."""


class InsufficientStake(SafeHouseError):
    """Raised when unstaking more than the position holds."""


class NoPosition(SafeHouseError):
    """Raised when claiming rewards without a stake position."""


# Harness


class SchemaError(SafeHouseError):
    """Raised when scenario or oracle JSON does not follow the schema."""


class UnknownActor(SchemaError):
    """Raised when a scenario event names an undeclared actor."""


class InstanceTooLarge(SafeHouseError):
    """Raised when an exhaustive search would exceed its size limit."""


class BoundViolation(SafeHouseError):
    """Raised when an adversary extracts more than the allowance bound admits."""
