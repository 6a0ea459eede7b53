"""Warped metrics, product charts to the hyperbolic model and their explicit error bounds."""

from __future__ import annotations

__version__ = "0.1.0"
