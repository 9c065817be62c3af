"""Replay: re-execute recorded calls with migration, mocking and code swaps.

A ReplayPlan bundles the knobs: which top-level window to rerun, how global
state migrates into the new run (all / only / except plus manual overrides),
which callables answer from recorded events instead of running live, and
which functions execute substituted source.  Every replay records into a new
session whose parent pointers anchor it on the original timeline.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .compare import map_lines
from .lang.errors import TrkError
from .lang.interp import Env
from .lang.lower import Program, lower
from .lang.parser import parse
from .monitor import HookRegistry, RunResult, run_monitored, specs_from_program
from .runtime import from_jsonable
from .store import Store, StoreError


class ReplayError(TrkError):
    pass


@dataclass
class ReplayPlan:
    """Declarative description of how a replay run differs from the record."""
    window: tuple[int, int] | None = None  # inclusive top-level ordinal range
    migrate: str = "all"  # "all" | "only" | "except"
    migrate_names: set[str] = field(default_factory=set)
    manual_globals: dict[str, object] = field(default_factory=dict)  # JSON-able
    mocked: set[str] = field(default_factory=set)
    code_override: dict[str, str] = field(default_factory=dict)  # fn -> source

    def validate(self) -> None:
        if self.migrate not in ("all", "only", "except"):
            raise ReplayError(f"unknown migration mode {self.migrate!r}")
        if self.migrate == "all" and self.migrate_names:
            raise ReplayError("migration mode 'all' takes no name list")
        if self.window is not None and self.window[0] > self.window[1]:
            raise ReplayError(f"empty replay window {self.window}")

    def migrates(self, name: str) -> bool:
        if name in self.manual_globals:
            return False  # manual value wins over the recorded one
        if self.migrate == "all":
            return True
        if self.migrate == "only":
            return name in self.migrate_names
        return name not in self.migrate_names


# --- mocking ---

@dataclass
class MockSet:
    """Recorded event results queued FIFO per callable, in global order."""
    queues: dict[str, deque]  # name -> deque of return-value VersionRefs
    warnings: list[str] = field(default_factory=list)

    def install(self, interp, store: Store) -> None:
        for name, queue in self.queues.items():
            interp.call_overrides[name] = _make_override(
                interp, store, name, queue)


def _make_override(interp, store: Store, name: str, queue: deque):
    env = interp.env

    def override(args):
        if queue:
            return store.materialize_guest(queue.popleft(), interp)
        # Queue exhausted: fall through to the live implementation.
        if name in interp.program.flat:
            del interp.call_overrides[name]
            try:
                return interp.call(name, args)
            finally:
                interp.call_overrides[name] = override
        builtin = env.builtins.get(name)
        if builtin is None:
            raise ReplayError(f"mocked callable {name!r} has no live implementation")
        return builtin.fn(args, interp)

    return override


def _top_ancestor_ordinal(store: Store, call) -> int:
    while call.parent_call is not None:
        call = store.get_call(call.parent_call)
    return call.ordinal


def build_mocks(store: Store, mocked: set[str], session_id: int,
                window: tuple[int, int] | None = None,
                call_id: int | None = None,
                from_snapshot: int | None = None) -> MockSet:
    """Collect recorded events for ``mocked`` names in execution order.

    Scope is either one call (``call_id``) or all calls of a session whose
    top-level ancestor's ordinal falls inside ``window``.  For snapshot
    resumes, ``from_snapshot`` drops events attached to earlier snapshots —
    they happened before the resume point and must not be served again.
    """
    if call_id is not None:
        scope = [store.get_call(call_id)]
    else:
        scope = store.get_calls(session=session_id)
        if window is not None:
            start, end = window
            scope = [c for c in scope
                     if start <= _top_ancestor_ordinal(store, c) <= end]
    resume_ordinal = (store.get_snapshot(from_snapshot).ordinal
                      if from_snapshot is not None else None)
    records: list[tuple[int, int, str, int]] = []
    for call in scope:
        for e in store.get_events_for_call(call.id):
            if e.callable not in mocked:
                continue
            if resume_ordinal is not None and e.snapshot is not None:
                if store.get_snapshot(e.snapshot).ordinal < resume_ordinal:
                    continue
            records.append((call.ordinal, e.seq, e.callable, e.return_ref))
    records.sort(key=lambda r: (r[0], r[1]))
    queues: dict[str, deque] = {name: deque() for name in mocked}
    for _, _, name, ret in records:
        queues[name].append(ret)
    warnings = [f"mocked callable {name!r} has no recorded events in scope; "
                "all calls will fall through to the live implementation"
                for name in sorted(mocked) if not queues[name]]
    return MockSet(queues=queues, warnings=warnings)


# --- code substitution ---

def _override_function_source(store: Store, name: str, text_or_id) -> str:
    if isinstance(text_or_id, int):
        cv = store.code_versions.get(text_or_id)
        if cv is None:
            raise ReplayError(f"unknown code version {text_or_id}")
        if cv.function_name != name:
            raise ReplayError(
                f"code version {text_or_id} is for {cv.function_name!r}, "
                f"not {name!r}")
        return cv.source_text
    return text_or_id


def build_variant_program(store: Store, base_source: str, path: str,
                          overrides: dict[str, str]) -> Program:
    """Splice substituted function sources into the base unit and re-lower.

    Each override replaces the named function's full text (pragma included,
    when the replacement carries one); the rest of the unit is untouched, so
    unmodified functions keep identical code versions.  Changing a
    function's arity is rejected — recorded arguments must still apply.
    """
    base_unit = parse(base_source, path)
    by_name = {f.name: f for f in base_unit.functions}
    lines = base_source.split("\n")
    edits = []
    for name, override in overrides.items():
        fn = by_name.get(name)
        if fn is None:
            raise ReplayError(f"cannot override unknown function {name!r}")
        text = _override_function_source(store, name, override)
        try:
            repl_unit = parse(text, f"<override:{name}>")
        except TrkError as exc:
            raise ReplayError(f"code override for {name!r} does not parse: {exc}")
        repl = next((f for f in repl_unit.functions if f.name == name), None)
        if repl is None:
            raise ReplayError(
                f"code override for {name!r} does not define that function")
        if len(repl.params) != len(fn.params):
            raise ReplayError(
                f"code override changes arity of {name!r}: "
                f"{len(fn.params)} -> {len(repl.params)}")
        start = (fn.pragma.line if fn.pragma else fn.line) - 1
        repl_start = (repl.pragma.line if repl.pragma else repl.line) - 1
        repl_lines = text.split("\n")[repl_start:repl.end_line]
        edits.append((start, fn.end_line, repl_lines))
    edits.sort(key=lambda e: e[0], reverse=True)
    for start, end, repl_lines in edits:
        lines[start:end] = repl_lines
    variant_source = "\n".join(lines)
    try:
        return lower(parse(variant_source, path))
    except TrkError as exc:
        raise ReplayError(f"spliced variant program does not parse: {exc}")


def _session_program(store: Store, session_id: int):
    session = store.sessions.get(session_id)
    if session is None:
        raise StoreError(f"unknown session id {session_id}")
    record = store.programs[session.program_hash]
    return session, record


def _prepare(store: Store, session_id: int, plan: ReplayPlan) -> Program:
    plan.validate()
    _, record = _session_program(store, session_id)
    if plan.code_override:
        return build_variant_program(store, record.source, record.path,
                                     plan.code_override)
    return lower(parse(record.source, record.path))


def _apply_globals(interp, store: Store, plan: ReplayPlan,
                   recorded: dict[str, int]) -> None:
    for name, ref in recorded.items():
        if plan.migrates(name):
            interp.env.globals[name] = store.materialize_guest(ref, interp)
    for name, value in plan.manual_globals.items():
        interp.env.globals[name] = from_jsonable(interp, value)


def _recorded_args(store: Store, interp, call, params: list[str]) -> list:
    args = []
    for p in params:
        if p not in call.locals:
            raise ReplayError(
                f"cannot replay {call.function}(): argument {p!r} was not "
                "captured (filtered by include/exclude)")
        args.append(store.materialize_guest(call.locals[p], interp))
    return args


def _run_replay(store: Store, program: Program, env: Env, hooks: HookRegistry,
                label: str, parent_session: int, parent_offset: int,
                mocks: MockSet, setup: Callable, driver: Callable,
                serializers=None) -> RunResult:
    specs = specs_from_program(program)

    def factory(interp):
        mocks.install(interp, store)
        setup(interp)

    return run_monitored(program, "", env, specs, hooks, store, label,
                         serializers=serializers,
                         parent_session=parent_session,
                         parent_offset=parent_offset,
                         interp_factory=factory, driver=driver)


def replay_function(store: Store, call_id: int, plan: ReplayPlan, env: Env,
                    hooks: HookRegistry | None = None, label: str | None = None,
                    serializers=None) -> RunResult:
    """Re-execute one recorded call with its captured arguments."""
    call = store.get_call(call_id)
    program = _prepare(store, call.session, plan)
    flat = program.flat.get(call.function)
    if flat is None:
        raise ReplayError(f"function {call.function!r} missing from program")
    mocks = build_mocks(store, plan.mocked, call.session, call_id=call.id)

    def setup(interp):
        _apply_globals(interp, store, plan, call.globals)

    def driver(interp):
        args = _recorded_args(store, interp, call, flat.params)
        interp.call(call.function, args)

    return _run_replay(store, program, env, hooks or {},
                       label or f"replay:call:{call_id}",
                       call.session, call.ordinal, mocks, setup, driver,
                       serializers)


def replay_session(store: Store, session_id: int, plan: ReplayPlan, env: Env,
                   hooks: HookRegistry | None = None, label: str | None = None,
                   serializers=None) -> RunResult:
    """Re-execute a window of a session's top-level calls in order.

    Globals are migrated once, from the first call in the window, then
    evolve live; each subsequent call receives its recorded arguments, so
    divergence introduced by the plan propagates through shared state.
    """
    plan.validate()
    calls = store.get_calls(session=session_id, top_level_only=True)
    if not calls:
        raise ReplayError(f"session {session_id} has no top-level calls")
    if plan.window is not None:
        start, end = plan.window
        calls = [c for c in calls if start <= c.ordinal <= end]
        if not calls:
            raise ReplayError(
                f"no top-level calls in window {plan.window} of session {session_id}")
    program = _prepare(store, session_id, plan)
    for c in calls:
        if c.function not in program.flat:
            raise ReplayError(f"function {c.function!r} missing from program")
    mocks = build_mocks(store, plan.mocked, session_id,
                        window=(calls[0].ordinal, calls[-1].ordinal))

    def setup(interp):
        _apply_globals(interp, store, plan, calls[0].globals)

    def driver(interp):
        for c in calls:
            params = program.flat[c.function].params
            args = _recorded_args(store, interp, c, params)
            interp.call(c.function, args)

    return _run_replay(store, program, env, hooks or {},
                       label or f"replay:session:{session_id}",
                       session_id, calls[0].ordinal, mocks, setup, driver,
                       serializers)


def replay_from_snapshot(store: Store, snapshot_id: int, plan: ReplayPlan,
                         env: Env, hooks: HookRegistry | None = None,
                         label: str | None = None, serializers=None) -> RunResult:
    """Resume execution at a recorded snapshot's line with its locals.

    Under a code override the entry line is carried across via the exact
    line mapping between old and substituted sources; a line with no
    counterpart cannot anchor the resume and is rejected.
    """
    snap = store.get_snapshot(snapshot_id)
    call = store.get_call(snap.call)
    program = _prepare(store, call.session, plan)
    flat = program.flat.get(call.function)
    if flat is None:
        raise ReplayError(f"function {call.function!r} missing from program")

    entry_line = snap.line_no
    if call.function in plan.code_override:
        old_code = store.code_versions[call.code]
        new_fn = flat.func
        mapping = map_lines(old_code.source_text, old_code.first_line,
                            new_fn.source_text, new_fn.line).a_to_b()
        mapped = mapping.get(snap.line_no)
        if mapped is None:
            raise ReplayError(
                f"snapshot line {snap.line_no} has no counterpart in the "
                f"substituted code for {call.function!r}")
        entry_line = mapped

    mocks = build_mocks(store, plan.mocked, call.session, call_id=call.id,
                        from_snapshot=snapshot_id)

    def setup(interp):
        _apply_globals(interp, store, plan, snap.globals)

    def driver(interp):
        preset = {name: store.materialize_guest(ref, interp)
                  for name, ref in snap.locals.items()}
        interp.call(call.function, [], entry_line=entry_line,
                    preset_locals=preset)

    return _run_replay(store, program, env, hooks or {},
                       label or f"replay:snapshot:{snapshot_id}",
                       call.session, call.ordinal, mocks, setup, driver,
                       serializers)
