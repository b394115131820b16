"""Compliance-aware federated learning simulator with adaptive per-client DP."""

__version__ = "0.1.0"
