"""Computational laboratory for Lyons-type Rajchman measures supported on
numbers that are normal in odd bases and non-normal in even bases."""

from __future__ import annotations

__version__ = "0.1.0"
