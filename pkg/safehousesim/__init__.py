"""
Safe-House Simulator

Deterministic simulation of a fund custody protocol: a Safe-House contract
with bounded manager withdrawals, one-time-next-time passwords, threshold
governance, oracle valuation and staking dispatch.
"""

__version__ = "0.1.0"

from safehousesim.main import main

__all__ = ["main"]
