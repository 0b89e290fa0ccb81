"""
Tests for the cfica incremental clustering package.
"""
