"""Hybrid network simulator and shortest-path algorithms for sparse graphs."""

__version__ = "0.1.0"
