"""Built-in hook registry.

Hooks receive plain JSON-able copies of guest data (arguments for call
hooks, the return value for return hooks) and produce JSON-able metadata
stored alongside the call.  They can never mutate guest state because they
never see it.
"""

from __future__ import annotations

from .monitor import HookRegistry


def capture_scene(payload):
    """Store a declarative scene description (e.g. a frame's display list)."""
    return payload


def default_hooks() -> HookRegistry:
    return {"capture_scene": capture_scene}
