"""Integration tests for sweepcert."""
