"""Monitoring: turns @monitor pragmas into trace capture.

A Recorder sits on the interpreter's instrumentation sink.  For each call of
a monitored function it captures the calling context (locals = arguments,
globals restricted by static global-reference analysis), per-line snapshots
at line granularity, tracked-callable events, and hook metadata, interning
everything into the trace store.  Calls commit atomically on return.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable

from .lang import ast
from .lang.errors import TrkError, TrkRuntimeError
from .lang.interp import Env, InstrumentationSink, Interpreter
from .lang.lower import Program
from .lang.values import NativeHandle, TrkList, TrkMap
from .store import Blob, InternContext, Skipped, Store

TOP_LEVEL = "__top_level__"


class MonitorError(TrkError):
    pass


@dataclass
class MonitorSpec:
    function: str
    granularity: str  # "function" | "line"
    tracked: set[str] = field(default_factory=set)
    call_hooks: list[str] = field(default_factory=list)
    return_hooks: list[str] = field(default_factory=list)
    include: set[str] = field(default_factory=set)
    exclude: set[str] = field(default_factory=set)
    global_refs: set[str] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)


# hook name -> host callable(payload) -> JSON-able metadata
HookRegistry = dict[str, Callable]


def guest_to_jsonable(value):
    """Guest value -> plain JSON-able structure (for hook payloads)."""
    if isinstance(value, TrkList):
        return [guest_to_jsonable(v) for v in value.items]
    if isinstance(value, TrkMap):
        return {k: guest_to_jsonable(v) for k, v in value.entries.items()}
    if isinstance(value, NativeHandle):
        return {"__native__": value.type_tag}
    return value


# --- static global-reference analysis ---

def _collect_refs(body: list[ast.Stmt]) -> tuple[set[str], set[str]]:
    """All names read in expression position, and all called names."""
    reads: set[str] = set()
    calls: set[str] = set()

    def walk_expr(e: ast.Expr | None) -> None:
        if e is None:
            return
        if isinstance(e, ast.Name):
            reads.add(e.ident)
        elif isinstance(e, ast.ListLit):
            for x in e.items:
                walk_expr(x)
        elif isinstance(e, ast.MapLit):
            for _, v in e.pairs:
                walk_expr(v)
        elif isinstance(e, ast.BinOp):
            walk_expr(e.left)
            walk_expr(e.right)
        elif isinstance(e, ast.UnaryOp):
            walk_expr(e.operand)
        elif isinstance(e, ast.Index):
            walk_expr(e.base)
            walk_expr(e.index)
        elif isinstance(e, ast.Attr):
            walk_expr(e.base)
        elif isinstance(e, ast.Call):
            calls.add(e.func)
            for a in e.args:
                walk_expr(a)

    def walk_stmt(s: ast.Stmt) -> None:
        if isinstance(s, ast.Assign):
            walk_expr(s.value)
            if not isinstance(s.target, ast.Name):
                walk_expr(s.target)
        elif isinstance(s, ast.ExprStmt):
            walk_expr(s.expr)
        elif isinstance(s, ast.Return):
            walk_expr(s.value)
        elif isinstance(s, ast.If):
            walk_expr(s.cond)
            for sub in s.then_body + s.else_body:
                walk_stmt(sub)
        elif isinstance(s, ast.While):
            walk_expr(s.cond)
            for sub in s.body:
                walk_stmt(sub)
        elif isinstance(s, ast.ForIn):
            walk_expr(s.iterable)
            for sub in s.body:
                walk_stmt(sub)

    for s in body:
        walk_stmt(s)
    return reads, calls


def analyze_global_refs(program: Program, fn: str) -> set[str]:
    """Names referenced globally by ``fn`` or any guest function it reaches.

    Includes called names (they resolve globally) and names declared
    ``global`` inside the function, so captured context suffices for replay.
    All calls are by name in Trk, so the call graph is static and the
    dynamic-call over-approximation never triggers.
    """
    if fn not in program.flat:
        raise MonitorError(f"unknown function {fn!r}")
    result: set[str] = set()
    visited: set[str] = set()
    queue = [fn]
    while queue:
        name = queue.pop()
        if name in visited:
            continue
        visited.add(name)
        flat = program.flat[name]
        reads, calls = _collect_refs(flat.func.body if flat.func else [])
        result |= (reads - flat.local_names) | flat.global_decls
        for callee in calls:
            result.add(callee)
            if callee in program.flat:
                queue.append(callee)
    return result


def specs_from_program(program: Program) -> dict[str, MonitorSpec]:
    """Build MonitorSpecs from @monitor pragmas, with global-ref analysis."""
    specs: dict[str, MonitorSpec] = {}
    for name, flat in program.flat.items():
        pragma = flat.func.pragma if flat.func else None
        if pragma is None:
            continue
        include, exclude = set(pragma.include), set(pragma.exclude)
        if include & exclude:
            raise MonitorError(
                f"{name}: include and exclude overlap: {sorted(include & exclude)}")
        specs[name] = MonitorSpec(
            function=name, granularity=pragma.granularity,
            tracked=set(pragma.track), call_hooks=list(pragma.call_hooks),
            return_hooks=list(pragma.return_hooks),
            include=include, exclude=exclude,
            global_refs=analyze_global_refs(program, name))
    return specs


def validate_specs(specs: dict[str, MonitorSpec], program: Program, env: Env) -> None:
    for spec in specs.values():
        for name in spec.tracked:
            if name not in env.builtins and name not in program.flat:
                raise MonitorError(
                    f"{spec.function}: tracked callable {name!r} does not resolve "
                    "to a builtin or guest function")
        for hook in spec.call_hooks + spec.return_hooks:
            pass  # resolved against the registry at run time


# --- recording ---

class _ActiveCall:
    __slots__ = ("call_id", "ordinal", "spec", "function", "code_id",
                 "parent_call_id", "locals", "globals", "snapshots", "events",
                 "hook_results", "event_seq", "last_line")

    def __init__(self, call_id, ordinal, spec, function, code_id, parent_call_id):
        self.call_id = call_id
        self.ordinal = ordinal
        self.spec = spec
        self.function = function
        self.code_id = code_id
        self.parent_call_id = parent_call_id
        self.locals: dict[str, int] = {}
        self.globals: dict[str, int] = {}
        self.snapshots: list = []  # (line_no, locals refs, globals refs)
        self.events: list = []  # (snapshot ordinal | None, callable, seq, args, ret)
        self.hook_results: dict = {}
        self.event_seq = 0
        self.last_line: int | None = None


class Recorder(InstrumentationSink):
    def __init__(self, store: Store, program: Program, env: Env,
                 specs: dict[str, MonitorSpec], hooks: HookRegistry,
                 session_id: int, serializers: dict[str, Callable] | None = None):
        self.store = store
        self.program = program
        self.env = env
        self.specs = specs
        self.hooks = hooks or {}
        self.session_id = session_id
        self.serializers = serializers or {}
        self.ctx = InternContext()
        self.stack: list[_ActiveCall] = []
        self.frames: dict[int, _ActiveCall] = {}
        self._code_ids: dict[str, int] = {}
        self._ordinal = 0
        self.skipped_count = 0
        self.call_count = 0
        self.snapshot_count = 0
        self.event_count = 0

    # --- capture helpers ---

    def _convert_native(self, handle: NativeHandle):
        serializer = self.serializers.get(handle.type_tag)
        if serializer is None:
            self.skipped_count += 1
            return Skipped(f"unserializable native:{handle.type_tag}")
        try:
            return Blob(serializer(handle.payload))
        except Exception as exc:
            raise MonitorError(
                f"custom serializer for {handle.type_tag!r} failed: {exc}") from exc

    def _intern(self, value, call_id: int) -> int:
        return self.store.intern_value(self.ctx, value, first_seen=call_id,
                                       convert_native=self._convert_native)

    def _filter_names(self, names, spec: MonitorSpec):
        visible = set(names)
        if spec.include:
            visible &= spec.include
        return visible - spec.exclude

    def _capture_vars(self, mapping: dict, spec: MonitorSpec, call_id: int) -> dict[str, int]:
        keep = self._filter_names(mapping.keys(), spec)
        return {name: self._intern(mapping[name], call_id)
                for name in sorted(keep)}

    def _capture_globals(self, spec: MonitorSpec, call_id: int) -> dict[str, int]:
        visible = {n: self.env.globals[n] for n in spec.global_refs
                   if n in self.env.globals}
        return self._capture_vars(visible, spec, call_id)

    def _run_hooks(self, names: list[str], payload, ac: _ActiveCall) -> None:
        for name in names:
            hook = self.hooks.get(name)
            if hook is None:
                raise MonitorError(f"hook {name!r} is not registered")
            try:
                ac.hook_results[name] = hook(payload)
            except Exception as exc:
                where = f" at line {ac.last_line}" if ac.last_line else ""
                raise MonitorError(f"hook {name!r} failed{where}: {exc}") from exc

    def _code_id_for(self, fn_name: str) -> int:
        cid = self._code_ids.get(fn_name)
        if cid is None:
            flat = self.program.flat[fn_name]
            func = flat.func
            line_map = sorted({e.line for e in flat.entries})
            cid = self.store.intern_code(fn_name, func.source_text, func.line,
                                         line_map)
            self._code_ids[fn_name] = cid
        return cid

    # --- sink callbacks ---

    def on_call(self, frame_id, fn_name, arg_items):
        spec = self.specs.get(fn_name)
        if spec is None:
            return
        call_id = self.store._alloc("calls")
        ordinal = self._ordinal
        self._ordinal += 1
        parent = self.stack[-1].call_id if self.stack else None
        ac = _ActiveCall(call_id, ordinal, spec, fn_name,
                         self._code_id_for(fn_name), parent)
        ac.locals = self._capture_vars(dict(arg_items), spec, call_id)
        ac.globals = self._capture_globals(spec, call_id)
        if spec.call_hooks:
            self._run_hooks(spec.call_hooks,
                            [guest_to_jsonable(v) for _, v in arg_items], ac)
        self.stack.append(ac)
        self.frames[frame_id] = ac

    def on_line(self, frame_id, fn_name, line_no, locals_map):
        ac = self.frames.get(frame_id)
        if ac is None:
            return
        ac.last_line = line_no
        if ac.spec.granularity != "line":
            return
        locals_refs = self._capture_vars(locals_map, ac.spec, ac.call_id)
        globals_refs = self._capture_globals(ac.spec, ac.call_id)
        ac.snapshots.append((line_no, locals_refs, globals_refs))

    def on_callable_result(self, name, args, result):
        for ac in reversed(self.stack):
            if name in ac.spec.tracked:
                seq = ac.event_seq
                ac.event_seq += 1
                arg_refs = [self._intern(a, ac.call_id) for a in args]
                ret_ref = self._intern(result, ac.call_id)
                snap_ordinal = None
                if ac.spec.granularity == "line" and ac.snapshots:
                    snap_ordinal = len(ac.snapshots) - 1
                ac.events.append((snap_ordinal, name, seq, arg_refs, ret_ref))
                return

    def on_return(self, frame_id, fn_name, value):
        ac = self.frames.pop(frame_id, None)
        if ac is None:
            return
        assert self.stack and self.stack[-1] is ac
        self.stack.pop()
        if ac.spec.return_hooks:
            self._run_hooks(ac.spec.return_hooks, guest_to_jsonable(value), ac)
        return_ref = self._intern(value, ac.call_id)
        hook_meta = None
        if ac.hook_results:
            blob = json.dumps(ac.hook_results, sort_keys=True,
                              separators=(",", ":")).encode()
            hook_meta = self.store.intern_hook_blob(blob)
        self.store.add_call(self.session_id, ac.ordinal, ac.function, ac.code_id,
                            ac.parent_call_id, ac.locals, ac.globals,
                            return_ref, hook_meta, call_id=ac.call_id)
        snap_ids = []
        for ordinal, (line_no, locals_refs, globals_refs) in enumerate(ac.snapshots):
            snap_ids.append(self.store.add_snapshot(ac.call_id, ordinal, line_no,
                                                    locals_refs, globals_refs))
        for snap_ordinal, name, seq, arg_refs, ret_ref in ac.events:
            snap_id = snap_ids[snap_ordinal] if snap_ordinal is not None else None
            self.store.add_event(ac.call_id, snap_id, name, seq, arg_refs, ret_ref)
        self.call_count += 1
        self.snapshot_count += len(ac.snapshots)
        self.event_count += len(ac.events)
        self.store.notify_commit(self.session_id, ac.ordinal)

    def abort_in_flight(self) -> None:
        """Drop uncommitted calls after a runtime failure."""
        self.stack.clear()
        self.frames.clear()


def capture_value(store: Store, ctx: InternContext, value,
                  serializers: dict[str, Callable] | None = None,
                  first_seen: int | None = None) -> int:
    """Intern one value; native handles use ``serializers`` or are skipped."""
    serializers = serializers or {}

    def convert(handle: NativeHandle):
        serializer = serializers.get(handle.type_tag)
        if serializer is None:
            return Skipped(f"unserializable native:{handle.type_tag}")
        try:
            return Blob(serializer(handle.payload))
        except Exception as exc:
            raise MonitorError(
                f"custom serializer for {handle.type_tag!r} failed: {exc}") from exc

    return store.intern_value(ctx, value, first_seen=first_seen,
                              convert_native=convert)


@dataclass
class RunResult:
    session_id: int
    calls: int
    snapshots: int
    events: int
    skipped_values: int
    error: str | None = None


def run_monitored(program: Program, entry: str, env: Env,
                  specs: dict[str, MonitorSpec], hooks: HookRegistry,
                  store: Store, label: str,
                  serializers: dict[str, Callable] | None = None,
                  entry_args: list | None = None,
                  parent_session: int | None = None,
                  parent_offset: int | None = None,
                  interp_factory: Callable | None = None,
                  driver: Callable | None = None) -> RunResult:
    """Run ``entry`` (a function name or TOP_LEVEL) under monitoring.

    Creates one Session; a guest runtime error marks the session failed at
    the next uncommitted ordinal and is reported in the result rather than
    raised, so partial branches stay explorable.  When ``driver`` is given
    it receives the interpreter and runs the whole guest workload in place
    of the default single-entry invocation (used by replay).
    """
    validate_specs(specs, program, env)
    prog_hash = store.intern_program(program.unit.source, program.unit.path)
    session_id = store.new_session(label, time.time(), prog_hash,
                                   parent_session, parent_offset)
    recorder = Recorder(store, program, env, specs, hooks, session_id,
                        serializers)
    interp = Interpreter(program, env, recorder)
    if interp_factory is not None:
        interp_factory(interp)
    error = None
    try:
        if driver is not None:
            driver(interp)
        elif entry == TOP_LEVEL:
            interp.run_top_level()
        else:
            interp.call(entry, entry_args if entry_args is not None else [])
    except TrkRuntimeError as exc:
        store.sessions[session_id].failed_at = recorder.call_count
        recorder.abort_in_flight()
        error = str(exc)
    return RunResult(session_id=session_id, calls=recorder.call_count,
                     snapshots=recorder.snapshot_count,
                     events=recorder.event_count,
                     skipped_values=recorder.skipped_count, error=error)
