"""Liability rules, costs and investment solvers for sequential disruption chains."""

from .logging_config import configure_logging

__all__ = ["configure_logging"]
