"""Shared fixtures for building small worlds."""

from pathlib import Path

import pytest

from safehousesim.amounts import TOKEN
from safehousesim.governance import OwnerSet, grant_manager
from safehousesim.ledger import SAFEHOUSE, Address
from safehousesim.otntp import Commitment, seed_commitment
from safehousesim.valuation import approve_asset
from safehousesim.world import World

OWNER_LABELS = ["o1", "o2", "o3", "o4", "o5"]
GOLDEN_DIR = Path(__file__).parent / "golden"


def pytest_addoption(parser):
    parser.addoption(
        "--regen-golden",
        action="store_true",
        default=False,
        help="Rewrite the pinned report digests under tests/golden",
    )


@pytest.fixture
def golden_digest(request):
    """Compare a digest with its pinned file, or rewrite the file under --regen-golden."""

    def check(name: str, digest: str) -> None:
        golden = GOLDEN_DIR / f"{name}.sha256"
        if request.config.getoption("--regen-golden"):
            GOLDEN_DIR.mkdir(exist_ok=True)
            golden.write_text(digest + "\n")
        if not golden.exists():
            pytest.skip(f"no pinned digest for {name}; run pytest --regen-golden")
        assert golden.read_text().strip() == digest

    return check


def password(n: int) -> str:
    """Deterministic test password number n."""
    return f"test-password-{n:04d}"


def standard_world(params=None, managers=("mgr1",), threshold=3, vault_usds=1000, seed=0):
    """A 5-owner world with managers granted, the stable approved and the vault seeded.

    Plain function so hypothesis tests can build a fresh world per example.
    """
    owners = OwnerSet(frozenset(Address.from_label(o) for o in OWNER_LABELS), threshold)
    world = World(owners, params=params, seed=seed)
    for label in OWNER_LABELS:
        world.address(label)
    approve_asset(world, world.stable_asset, "stable")
    for label in managers:
        grant_manager(world, world.address(label))
    if vault_usds:
        world.ledger.seed_balance(SAFEHOUSE, world.stable_asset, vault_usds * TOKEN)
    return world


@pytest.fixture
def make_world():
    """Factory for a 5-owner, threshold-3 world with managers granted and the stable approved."""
    return standard_world


@pytest.fixture
def seeded_world(make_world):
    """Factory for a world whose manager mgr1 is seeded with password(0)."""

    def factory(**kwargs):
        world = make_world(**kwargs)
        seed_commitment(world, world.address("mgr1"), Commitment.of(password(0)))
        return world

    return factory
