"""
Shared Services

Cross-cutting services used by every command.
"""

from .run_context import (
    RunContext,
    clear_run_context,
    get_run_context,
    set_run_context,
    update_cache_hash,
)

__all__ = [
    "RunContext",
    "clear_run_context",
    "get_run_context",
    "set_run_context",
    "update_cache_hash",
]
