"""Tests for dreval."""
