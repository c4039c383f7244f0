"""Numerical services, one per module of the toolkit."""
