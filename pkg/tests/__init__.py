"""Tests for the kef package."""
