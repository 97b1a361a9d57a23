"""
Run Context Management

Provides run-scoped identity (run id, resolved config hash, cache hash) to every stage and
binds it into structlog's context variables.
"""

from contextvars import ContextVar
from typing import Optional
from uuid import uuid4

import structlog

# Context variable to store the current run
_run_context: ContextVar[Optional["RunContext"]] = ContextVar("run_context", default=None)


class RunContext:
    """Identity of one command invocation."""

    def __init__(
        self,
        command: str,
        config_hash: str,
        cache_hash: Optional[str] = None,
        run_id: Optional[str] = None,
    ):
        """
        Initialize run context.

        Args:
            command: CLI command being executed
            config_hash: Hash of the resolved run configuration
            cache_hash: Key of the mapping table in use, if any
            run_id: Explicit identifier (random when omitted)
        """
        self.command = command
        self.config_hash = config_hash
        self.cache_hash = cache_hash
        self.run_id = run_id or uuid4().hex[:12]

    def log_fields(self) -> dict[str, str]:
        fields = {"run_id": self.run_id, "command": self.command, "config_hash": self.config_hash[:12]}
        if self.cache_hash:
            fields["cache_hash"] = self.cache_hash
        return fields


def set_run_context(context: RunContext) -> None:
    """Install the run context and bind its fields to every log event."""
    _run_context.set(context)
    structlog.contextvars.bind_contextvars(**context.log_fields())


def get_run_context() -> Optional[RunContext]:
    """Current run context, or None outside a run."""
    return _run_context.get()


def update_cache_hash(cache_hash: str) -> None:
    """Record the mapping table key once it is known."""
    context = _run_context.get()
    if context is not None:
        context.cache_hash = cache_hash
        structlog.contextvars.bind_contextvars(cache_hash=cache_hash)


def clear_run_context() -> None:
    """Remove the run context and its log bindings."""
    _run_context.set(None)
    structlog.contextvars.clear_contextvars()
