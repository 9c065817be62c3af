"""Trk guest language: parser, lowering pass and instrumentable interpreter."""

from .ast import FunctionDef, MonitorPragma, SourceUnit
from .errors import TrkError, TrkRuntimeError, TrkSyntaxError
from .interp import (
    Builtin, Env, InstrumentationSink, Interpreter,
    make_default_env, register_builtin,
)
from .lower import Entry, FlatBody, Program, lower
from .parser import parse
from .values import (
    IdentityAllocator, NativeHandle, TrkList, TrkMap,
    content_equal, to_display, type_name,
)

__all__ = [
    "Builtin", "Entry", "Env", "FlatBody", "FunctionDef", "IdentityAllocator",
    "InstrumentationSink", "Interpreter", "MonitorPragma", "NativeHandle",
    "Program", "SourceUnit", "TrkError", "TrkList", "TrkMap",
    "TrkRuntimeError", "TrkSyntaxError", "content_equal", "lower",
    "make_default_env", "parse", "register_builtin", "to_display", "type_name",
]
