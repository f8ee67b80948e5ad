"""Confinement applied to agent code inside the worker process.

Three layers, all best-effort but independent: the socket layer is stubbed
out process-wide so nothing can dial out, agent code executes under a
restricted builtins table (import allowlist, no filesystem or console
capture), and each execution runs under an address-space rlimit plus a
SIGALRM wall clock that raises WallClockExceeded at the Python level so even
a tight ``while True`` loop is interrupted.
"""
from __future__ import annotations

import builtins as _builtins
import resource
import signal
import socket
import sys
from typing import Any, Optional

from .framework import WallClockExceeded

# Pure-computation modules agent code may import. Everything else - os, sys,
# subprocess, socket, pathlib, ... - is refused at the import statement.
ALLOWED_IMPORTS = frozenset(
    {
        "abc",
        "array",
        "bisect",
        "collections",
        "copy",
        "dataclasses",
        "decimal",
        "enum",
        "fractions",
        "functools",
        "heapq",
        "itertools",
        "json",
        "math",
        "numbers",
        "operator",
        "random",
        "re",
        "statistics",
        "string",
        "time",
        "typing",
    }
)

# Builtins agent code has no business calling. Stray print() is harmless
# because the worker points sys.stdout at stderr before any agent code runs.
_REMOVED_BUILTINS = (
    "open",
    "input",
    "breakpoint",
    "help",
    "exit",
    "quit",
    "copyright",
    "credits",
    "license",
)

_real_import = _builtins.__import__


def disable_network() -> None:
    """Stub out socket construction for the whole process. Idempotent."""

    def _blocked(*_args: Any, **_kwargs: Any) -> Any:
        raise OSError("network access is disabled in the agent sandbox")

    socket.socket = _blocked  # type: ignore[misc]
    socket.socketpair = _blocked
    socket.create_connection = _blocked
    socket.create_server = _blocked
    socket.getaddrinfo = _blocked


def guarded_import(
    name: str,
    globals: Any = None,
    locals: Any = None,
    fromlist: Any = (),
    level: int = 0,
):
    root = name.partition(".")[0]
    if level != 0 or root not in ALLOWED_IMPORTS:
        raise ImportError(f"import of {name!r} is blocked in the agent sandbox")
    return _real_import(name, globals, locals, fromlist, level)


def restricted_builtins() -> dict[str, Any]:
    """The builtins table agent code executes under: fresh copy per call."""
    table = dict(vars(_builtins))
    for name in _REMOVED_BUILTINS:
        table.pop(name, None)
    table["__import__"] = guarded_import
    return table


def set_memory_limit(memory_bytes: int) -> Optional[tuple[int, int]]:
    """Lower RLIMIT_AS for this process; returns the previous limit, or None
    when the platform refused (logged, execution proceeds unlimited)."""
    try:
        previous = resource.getrlimit(resource.RLIMIT_AS)
        hard = previous[1]
        soft = memory_bytes if hard == resource.RLIM_INFINITY else min(memory_bytes, hard)
        resource.setrlimit(resource.RLIMIT_AS, (soft, hard))
        return previous
    except (ValueError, OSError) as exc:
        print(f"forgeworker: could not apply memory limit: {exc}", file=sys.stderr)
        return None


def clear_memory_limit(previous: Optional[tuple[int, int]]) -> None:
    if previous is None:
        return
    try:
        resource.setrlimit(resource.RLIMIT_AS, previous)
    except (ValueError, OSError) as exc:
        print(f"forgeworker: could not restore memory limit: {exc}", file=sys.stderr)


def arm_wall_clock(wall_seconds: float) -> None:
    """Raise WallClockExceeded in the main thread after wall_seconds."""

    def _expired(_signum: int, _frame: Any) -> None:
        raise WallClockExceeded(f"execution exceeded {wall_seconds}s")

    signal.signal(signal.SIGALRM, _expired)
    signal.setitimer(signal.ITIMER_REAL, wall_seconds)


def disarm_wall_clock() -> None:
    signal.setitimer(signal.ITIMER_REAL, 0.0)
    # SIG_IGN, not SIG_DFL: a SIGALRM already in flight when the timer is
    # cleared must not take the process down.
    signal.signal(signal.SIGALRM, signal.SIG_IGN)
