"""Tests for skill-discovery-cli."""
