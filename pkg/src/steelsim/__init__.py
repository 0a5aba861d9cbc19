"""A checking interpreter for concurrent separation logic over action trees."""

from __future__ import annotations

__version__ = "0.1.0"
