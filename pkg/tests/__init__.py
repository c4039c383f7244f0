"""Test package for the magnls toolkit."""
