"""Runtime value representation for Trk.

Primitives (int, float, bool, str, nil) are plain Python values and are
content-only.  Lists, maps and native handles are heap values: each carries
an identity id unique within one interpreter run, so the trace store can
track an object's versions over time.
"""

from __future__ import annotations

import itertools

from .errors import TrkRuntimeError

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


class IdentityAllocator:
    """Hands out identity ids, unique per interpreter run."""

    def __init__(self) -> None:
        self._counter = itertools.count(1)

    def next_id(self) -> int:
        return next(self._counter)


class TrkList:
    __slots__ = ("items", "ident")

    def __init__(self, items: list, ident: int):
        self.items = items
        self.ident = ident

    def __repr__(self) -> str:
        return f"TrkList#{self.ident}({self.items!r})"


class TrkMap:
    __slots__ = ("entries", "ident")

    def __init__(self, entries: dict, ident: int):
        self.entries = entries  # str -> value
        self.ident = ident

    def __repr__(self) -> str:
        return f"TrkMap#{self.ident}({self.entries!r})"


class NativeHandle:
    """Opaque host object passed into guest code; never serialized by default."""

    __slots__ = ("type_tag", "payload", "ident")

    def __init__(self, type_tag: str, payload, ident: int):
        self.type_tag = type_tag
        self.payload = payload
        self.ident = ident

    def __repr__(self) -> str:
        return f"NativeHandle#{self.ident}<{self.type_tag}>"


def check_int(value: int, line: int | None = None) -> int:
    if value < INT_MIN or value > INT_MAX:
        raise TrkRuntimeError("integer overflow (64-bit range exceeded)", line)
    return value


def type_name(value) -> str:
    if value is None:
        return "nil"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    if isinstance(value, TrkList):
        return "list"
    if isinstance(value, TrkMap):
        return "map"
    if isinstance(value, NativeHandle):
        return "native"
    raise TypeError(f"not a Trk value: {value!r}")


def content_equal(a, b) -> bool:
    """Deep structural equality; ignores identity, never mixes bool and int."""
    ta, tb = type_name(a), type_name(b)
    if ta != tb:
        return False
    if ta == "list":
        return len(a.items) == len(b.items) and all(
            content_equal(x, y) for x, y in zip(a.items, b.items))
    if ta == "map":
        if a.entries.keys() != b.entries.keys():
            return False
        return all(content_equal(a.entries[k], b.entries[k]) for k in a.entries)
    if ta == "native":
        return a.ident == b.ident
    return a == b


def to_display(value) -> str:
    t = type_name(value)
    if t == "nil":
        return "nil"
    if t == "bool":
        return "true" if value else "false"
    if t in ("int", "float"):
        return repr(value)
    if t == "str":
        return value
    if t == "list":
        return "[" + ", ".join(to_display(v) for v in value.items) + "]"
    if t == "map":
        return "{" + ", ".join(f'"{k}": {to_display(v)}' for k, v in value.entries.items()) + "}"
    return repr(value)
