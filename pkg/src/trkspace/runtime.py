"""Host-side runtime setup: external builtins, event scripts, value bridging.

External builtins are exactly the callables whose results may differ across
runs; here they are made reproducible by seeding (rand_int) or by scripted
event files (one JSON record per line, consumed FIFO per callable name).
"""

from __future__ import annotations

import json
import random
from collections import deque

from .lang.errors import TrkRuntimeError
from .lang.interp import Env, make_default_env, register_builtin
from .lang.values import NativeHandle, TrkList, TrkMap


def from_jsonable(interp, obj):
    """Canonical JSON value -> guest value (fresh identities in interp)."""
    if isinstance(obj, list):
        return interp.new_list([from_jsonable(interp, v) for v in obj])
    if isinstance(obj, dict):
        return interp.new_map({k: from_jsonable(interp, v) for k, v in obj.items()})
    return obj


def load_event_script(path: str) -> dict[str, deque]:
    """Parse an event-script file into per-callable FIFO queues."""
    queues: dict[str, deque] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                name = rec["callable"]
                ret = rec["return"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ValueError(f"{path}:{lineno}: bad event record") from None
            queues.setdefault(name, deque()).append(ret)
    return queues


def make_env(seed: int = 0, event_queues: dict[str, deque] | None = None) -> Env:
    """Default env plus reproducible external builtins.

    ``rand_int(a, b)`` draws from a PRNG seeded with ``seed``.  Every
    callable named in ``event_queues`` becomes an external builtin serving
    its scripted returns in order; ``get_events`` always exists and returns
    an empty list once (or if) its script is exhausted.
    """
    env = make_default_env()
    rng = random.Random(seed)

    def rand_int(args, interp):
        if len(args) != 2:
            raise TrkRuntimeError("rand_int() takes 2 arguments")
        a, b = args
        if a > b:
            raise TrkRuntimeError("rand_int() requires a <= b")
        return rng.randint(a, b)

    register_builtin(env, "rand_int", "external", rand_int)

    queues = dict(event_queues or {})

    def scripted(name, on_empty=None):
        def impl(args, interp):
            q = queues.get(name)
            if q:
                return from_jsonable(interp, q.popleft())
            if on_empty is not None:
                return on_empty(interp)
            raise TrkRuntimeError(f"event script exhausted for {name!r}")
        return impl

    register_builtin(env, "get_events", "external",
                     scripted("get_events", on_empty=lambda interp: interp.new_list([])))
    for name in queues:
        if name in ("get_events", "rand_int"):
            continue
        register_builtin(env, name, "external", scripted(name))
    return env
