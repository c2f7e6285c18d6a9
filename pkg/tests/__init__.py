"""
Test suite for the safehousesim package.
"""
