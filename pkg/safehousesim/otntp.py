"""One-Time-Next-Time-Password authentication for Safe-House managers.

A manager never stores a password with the house. The house keeps only the
SHA-256 commitment of the next expected plaintext; each withdrawal reveals
the current plaintext (which becomes public on the log) and supplies the
commitment of the following one. Passwords waiting to be used live on the
manager's device inside a ProtectedFile sealed under an admin password.
"""

import hashlib
import hmac
import logging
import secrets
import string
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

from safehousesim.errors import (
    AlreadySeeded,
    EmptyPlaintext,
    LengthTooShort,
    MacMismatch,
    Malformed,
    NotAManager,
    NotSeeded,
    VaultLocked,
)
from safehousesim.ledger import SAFEHOUSE, Address
from safehousesim.rng import SplitMix64

if TYPE_CHECKING:
    from safehousesim.world import World

logger = logging.getLogger(__name__)

PASSWORD_ALPHABET = string.ascii_letters + string.digits + "!@#$%^&*"
MIN_PASSWORD_LENGTH = 16
KDF_ITERATIONS = 10_000
SALT_SIZE = 16
MAC_SIZE = 32


@dataclass(frozen=True)
class Commitment:
    """SHA-256 digest of a password plaintext's UTF-8 bytes."""

    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError(f"commitment must be 32 bytes, got {len(self.digest)}")

    @classmethod
    def of(cls, plaintext: str) -> "Commitment":
        return cls(hashlib.sha256(plaintext.encode("utf-8")).digest())

    @classmethod
    def from_hex(cls, text: str) -> "Commitment":
        return cls(bytes.fromhex(text))

    def hex(self) -> str:
        return self.digest.hex()

    def matches(self, plaintext: str) -> bool:
        return hmac.compare_digest(self.digest, Commitment.of(plaintext).digest)

    def to_payload(self) -> str:
        return self.hex()


@dataclass
class AuthState:
    manager: Address
    commitment: Optional[Commitment] = None
    failure_count: int = 0

    @property
    def seeded(self) -> bool:
        return self.commitment is not None


def _require_manager(world: "World", caller: Address) -> None:
    if not world.governance.is_manager(caller):
        raise NotAManager(f"{world.label(caller)} does not hold the Manager role")


def auth_state(world: "World", manager: Address) -> AuthState:
    """Auth state of a manager, created unseeded on first access."""
    state = world.auth.get(manager)
    if state is None:
        state = AuthState(manager=manager)
        world.auth[manager] = state
    return state


def seed_commitment(world: "World", manager: Address, commitment: Commitment) -> None:
    """Store a manager's first commitment, or its fresh one after a governance reopen.

    Raises:
        NotAManager: If the caller does not hold the Manager role
        AlreadySeeded: If the manager already holds a commitment
    """
    with world.recording(manager, SAFEHOUSE, "seed_commitment", {"commitment": commitment}):
        _require_manager(world, manager)
        state = auth_state(world, manager)
        if state.seeded:
            raise AlreadySeeded(f"{world.label(manager)} already holds a commitment")
        state.commitment = commitment
        state.failure_count = 0
        logger.info(f"Seeded OTNTP commitment for {world.label(manager)}")


def verify_and_rotate(
    world: "World", manager: Address, plaintext: str, next_commitment: Commitment
) -> bool:
    """Check a revealed password and rotate to the next commitment on success.

    Both the plaintext and the next commitment are written to the public log
    whatever the result.

    Returns:
        True if the plaintext matched the stored commitment

    Raises:
        NotAManager: If the caller does not hold the Manager role
        NotSeeded: If the manager never seeded a commitment
        VaultLocked: If the house is locked
    """
    fields = {"plaintext": plaintext, "next_commitment": next_commitment}
    with world.recording(manager, SAFEHOUSE, "verify_and_rotate", fields) as call:
        accepted = _verify_and_rotate(world, manager, plaintext, next_commitment)
        if not accepted:
            call.fail("rejected")
        return accepted


def _verify_and_rotate(
    world: "World", manager: Address, plaintext: str, next_commitment: Commitment
) -> bool:
    from safehousesim.safehouse import LockReason, StatusKind, lock

    _require_manager(world, manager)
    state = auth_state(world, manager)
    if not state.seeded:
        raise NotSeeded(f"{world.label(manager)} has not seeded a commitment")
    house = world.safehouse
    if house.status.kind is StatusKind.LOCKED:
        raise VaultLocked(f"safe-house is {house.status.render()}")

    assert state.commitment is not None
    if state.commitment.matches(plaintext):
        state.commitment = next_commitment
        state.failure_count = 0
        house.auth_failures = 0
        logger.debug(f"OTNTP accepted for {world.label(manager)}")
        return True

    state.failure_count += 1
    house.auth_failures += 1
    failures = max(state.failure_count, house.auth_failures)
    logger.warning(
        f"OTNTP rejected for {world.label(manager)} "
        f"({failures}/{house.params.max_failed_auth})"
    )
    if failures >= house.params.max_failed_auth:
        lock(world, LockReason.AUTH_FAILURES)
    return False


def generate_password(seed: int, length: int = 32) -> str:
    """Draw a password uniformly from the 70-character alphabet.

    Args:
        seed: Seed of the deterministic generator
        length: Number of characters, at least 16

    Returns:
        Password text with at least one non-digit character

    Raises:
        LengthTooShort: If length is below 16
    """
    if length < MIN_PASSWORD_LENGTH:
        raise LengthTooShort(f"password length {length} below minimum {MIN_PASSWORD_LENGTH}")
    rng = SplitMix64(seed)
    size = len(PASSWORD_ALPHABET)
    while True:
        password = "".join(PASSWORD_ALPHABET[rng.below(size)] for _ in range(length))
        if not password.isdigit():
            return password


@dataclass(frozen=True)
class ProtectedFile:
    salt: bytes
    mac: bytes
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return self.salt + self.mac + self.ciphertext

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ProtectedFile":
        """Parse the salt(16) | mac(32) | ciphertext layout.

        Raises:
            Malformed: If the blob is too short to hold salt and mac
        """
        if len(blob) < SALT_SIZE + MAC_SIZE:
            raise Malformed(f"protected file is {len(blob)} bytes, needs at least 48")
        return cls(
            salt=blob[:SALT_SIZE],
            mac=blob[SALT_SIZE : SALT_SIZE + MAC_SIZE],
            ciphertext=blob[SALT_SIZE + MAC_SIZE :],
        )


def derive_key(admin_password: str, salt: bytes) -> bytes:
    key = admin_password.encode("utf-8") + salt
    for _ in range(KDF_ITERATIONS):
        key = hashlib.sha256(key).digest()
    return key


def _keystream_xor(key: bytes, data: bytes) -> bytes:
    out = bytearray()
    for block_index, offset in enumerate(range(0, len(data), 32)):
        block = hashlib.sha256(key + block_index.to_bytes(8, "big")).digest()
        chunk = data[offset : offset + 32]
        out += bytes(a ^ b for a, b in zip(chunk, block))
    return bytes(out)


def seal_protected_file(
    plaintext: Union[str, bytes], admin_password: str, salt: Optional[bytes] = None
) -> ProtectedFile:
    """Encrypt and authenticate plaintext under a key stretched from admin_password.

    Raises:
        EmptyPlaintext: If plaintext is empty
    """
    data = plaintext.encode("utf-8") if isinstance(plaintext, str) else bytes(plaintext)
    if not data:
        raise EmptyPlaintext("cannot seal an empty plaintext")
    if salt is None:
        salt = secrets.token_bytes(SALT_SIZE)
    if len(salt) != SALT_SIZE:
        raise Malformed(f"salt must be {SALT_SIZE} bytes")
    key = derive_key(admin_password, salt)
    ciphertext = _keystream_xor(key, data)
    mac = hashlib.sha256(key + ciphertext).digest()
    return ProtectedFile(salt=salt, mac=mac, ciphertext=ciphertext)


def open_protected_file(protected: Union[ProtectedFile, bytes], admin_password: str) -> bytes:
    """Return the sealed plaintext if the admin password reproduces the mac.

    Raises:
        Malformed: If the blob layout is invalid
        MacMismatch: If the password is wrong or the file was tampered with
    """
    if not isinstance(protected, ProtectedFile):
        protected = ProtectedFile.from_bytes(protected)
    if len(protected.salt) != SALT_SIZE or len(protected.mac) != MAC_SIZE:
        raise Malformed("protected file salt or mac has the wrong size")
    key = derive_key(admin_password, protected.salt)
    expected = hashlib.sha256(key + protected.ciphertext).digest()
    if not hmac.compare_digest(expected, protected.mac):
        raise MacMismatch("protected file authentication failed")
    return _keystream_xor(key, protected.ciphertext)
