"""Monitoring: pragma-driven capture of calls, snapshots, events and hooks."""

import pytest

from helpers import BINARY_SEARCH
from trkspace.lang.lower import lower
from trkspace.lang.parser import parse
from trkspace.monitor import (
    TOP_LEVEL,
    MonitorError,
    analyze_global_refs,
    run_monitored,
    specs_from_program,
)
from trkspace.runtime import make_env
from trkspace.store import Store


def record(source, entry=TOP_LEVEL, hooks=None, env=None, store=None,
           serializers=None, entry_args=None):
    program = lower(parse(source))
    store = store if store is not None else Store()
    env = env or make_env()
    result = run_monitored(program, entry, env, specs_from_program(program),
                           hooks or {}, store, "test", serializers=serializers,
                           entry_args=entry_args)
    return store, result


MOVE_PLAYER_MONITORED = """\
@monitor(granularity="%s")
def move_player(x, y, player):
    player.x = x
    player.y = y
    if y < 0 or y > 600:
        return false
    if x < 0 or x > 800:
        return false
    return true

p = {"x": 0, "y": 0}
ok = move_player(10, 20, p)
"""


class TestGranularity:
    def test_function_granularity_one_call_no_snapshots(self):
        store, res = record(MOVE_PLAYER_MONITORED % "function")
        assert res.calls == 1
        assert res.snapshots == 0
        call = store.get_calls(function_name="move_player")[0]
        locals_, _, code = store.get_calling_context(call.id)
        assert locals_ == {"x": 10, "y": 20, "player": {"x": 0, "y": 0}}
        assert store.render(call.return_ref) is True
        assert "def move_player" in code

    def test_line_granularity_one_snapshot_per_executed_line(self):
        store, res = record(MOVE_PLAYER_MONITORED % "line")
        assert res.calls == 1
        # two assignments, two if checks, one return
        assert res.snapshots == 5
        call = store.get_calls(function_name="move_player")[0]
        lines = [s.line_no for s in store.get_trace(call.id)]
        assert lines == sorted(lines)

    def test_binary_search_probe_history(self):
        src = BINARY_SEARCH + "\nbinary_search([1, 2, 3, 4, 5], 6)\n"
        store, res = record(src)
        call = store.get_calls(function_name="binary_search")[0]
        snaps = store.get_trace(call.id)
        probes = [(store.render(s.locals["left"]), store.render(s.locals["mid"]),
                   store.render(s.locals["right"]))
                  for s in snaps if "mid" in s.locals]
        # every (left, mid, right) combination the search visits
        assert (0, 2, 4) in probes
        assert (3, 3, 4) in probes
        assert (4, 4, 4) in probes
        assert store.render(call.return_ref) == -1

    def test_unmonitored_functions_not_recorded(self):
        src = """\
@monitor(granularity="function")
def outer():
    return helper()

def helper():
    return 7

outer()
"""
        store, res = record(src)
        assert res.calls == 1
        assert store.get_calls(function_name="helper") == []


class TestEvents:
    SRC = """\
@monitor(granularity="function", track=[rand_int])
def roll():
    a = rand_int(1, 6)
    b = rand_int(1, 6)
    return a + b

roll()
"""

    def test_tracked_callable_results_recorded_in_order(self):
        store, res = record(self.SRC)
        call = store.get_calls(function_name="roll")[0]
        events = store.get_events_for_call(call.id)
        assert [e.seq for e in events] == [0, 1]
        assert all(e.callable == "rand_int" for e in events)
        assert [store.render(e.args[0]) for e in events] == [1, 1]

    def test_events_attach_to_innermost_tracking_call(self):
        src = """\
@monitor(granularity="function", track=[rand_int])
def outer():
    return inner() + rand_int(1, 1)

@monitor(granularity="function", track=[rand_int])
def inner():
    return rand_int(1, 1)

outer()
"""
        store, res = record(src)
        inner = store.get_calls(function_name="inner")[0]
        outer = store.get_calls(function_name="outer")[0]
        assert len(store.get_events_for_call(inner.id)) == 1
        assert len(store.get_events_for_call(outer.id)) == 1

    def test_line_granularity_attaches_event_to_snapshot(self):
        src = """\
@monitor(granularity="line", track=[rand_int])
def roll():
    a = rand_int(1, 6)
    return a

roll()
"""
        store, res = record(src)
        call = store.get_calls(function_name="roll")[0]
        snaps = store.get_trace(call.id)
        attached = store.get_events_for_snapshot(snaps[0].id)
        assert len(attached) == 1
        assert attached[0].callable == "rand_int"

    def test_tracked_name_must_resolve(self):
        src = """\
@monitor(granularity="function", track=[no_such_thing])
def f():
    return 1

f()
"""
        with pytest.raises(MonitorError, match="no_such_thing"):
            record(src)


class TestFilters:
    SRC = """\
@monitor(granularity="line", %s)
def f(a, b):
    c = a + b
    return c

f(1, 2)
"""

    def test_include_restricts_capture(self):
        store, _ = record(self.SRC % "include=[a, c]")
        call = store.get_calls(function_name="f")[0]
        assert set(call.locals) == {"a"}
        final = store.get_trace(call.id)[-1]
        assert set(final.locals) == {"a", "c"}

    def test_exclude_drops_names(self):
        store, _ = record(self.SRC % "exclude=[b]")
        call = store.get_calls(function_name="f")[0]
        assert set(call.locals) == {"a"}

    def test_overlapping_include_exclude_rejected(self):
        with pytest.raises(MonitorError, match="overlap"):
            record(self.SRC % "include=[a], exclude=[a]")


class TestGlobals:
    SRC = """\
@monitor(granularity="function")
def f():
    global counter
    counter = counter + step
    return helper()

def helper():
    return bonus

counter = 10
step = 2
bonus = 5
unrelated = 99
f()
"""

    def test_global_refs_transitive_through_callees(self):
        program = lower(parse(self.SRC))
        refs = analyze_global_refs(program, "f")
        assert {"counter", "step", "bonus"} <= refs
        assert "unrelated" not in refs

    def test_captured_globals_cover_everything_read(self):
        store, _ = record(self.SRC)
        call = store.get_calls(function_name="f")[0]
        rendered = {k: store.render(v) for k, v in call.globals.items()}
        assert rendered["counter"] == 10
        assert rendered["step"] == 2
        assert rendered["bonus"] == 5
        assert "unrelated" not in rendered


class TestHooks:
    SRC = """\
@monitor(granularity="function", return_hook="snap")
def f():
    return [1, {"x": 2}]

f()
"""

    def test_return_hook_metadata_stored(self):
        store, _ = record(self.SRC, hooks={"snap": lambda payload: payload})
        call = store.get_calls(function_name="f")[0]
        assert call.hook_meta is not None

    def test_hook_sees_plain_copy_and_cannot_mutate_guest_state(self):
        seen = {}

        def snap(payload):
            seen["payload"] = payload
            payload[1]["x"] = 999  # mutates the copy only
            return "ok"

        store, res = record(self.SRC, hooks={"snap": snap})
        assert seen["payload"][0] == 1
        call = store.get_calls(function_name="f")[0]
        assert store.render(call.return_ref) == [1, {"x": 2}]

    def test_unregistered_hook_fails(self):
        with pytest.raises(MonitorError, match="snap"):
            record(self.SRC, hooks={})

    def test_failing_hook_reports_name(self):
        def boom(payload):
            raise ValueError("nope")

        with pytest.raises(MonitorError, match="snap"):
            record(self.SRC, hooks={"snap": boom})


class TestNativeValues:
    SRC = """\
@monitor(granularity="function")
def f(h):
    return h

f(make_handle())
"""

    def _env(self):
        from trkspace.lang.interp import register_builtin
        env = make_env()
        register_builtin(env, "make_handle", "external",
                         lambda args, interp: interp.new_handle("file", b"abc"))
        return env

    def test_unserializable_native_skipped_and_counted(self):
        store, res = record(self.SRC, env=self._env())
        assert res.skipped_values > 0
        call = store.get_calls(function_name="f")[0]
        assert store.object_versions[call.locals["h"]].kind == "skipped"

    def test_custom_serializer_produces_blob(self):
        store, res = record(self.SRC, env=self._env(),
                            serializers={"file": lambda payload: payload})
        assert res.skipped_values == 0
        call = store.get_calls(function_name="f")[0]
        assert store.object_versions[call.locals["h"]].kind == "blob"


class TestFailure:
    SRC = """\
@monitor(granularity="function")
def f(n):
    if n == 3:
        return boom / 0
    return n

f(1)
f(2)
f(3)
"""

    def test_runtime_error_marks_session_failed_keeps_committed_calls(self):
        store, res = record(self.SRC)
        assert res.error is not None
        session = store.sessions[res.session_id]
        assert session.failed_at == 2
        assert len(store.get_calls(session=res.session_id)) == 2


class TestDeterminism:
    def test_identical_runs_identical_state_hashes(self):
        src = MOVE_PLAYER_MONITORED % "line"
        store = Store()
        _, r1 = record(src, store=store)
        _, r2 = record(src, store=store)
        h1 = store.session_state_hashes(r1.session_id)
        h2 = store.session_state_hashes(r2.session_id)
        assert h1 == h2

    def test_identical_second_run_adds_no_payloads(self):
        src = MOVE_PLAYER_MONITORED % "line"
        store = Store()
        record(src, store=store)
        before = len(store.payloads)
        record(src, store=store)
        assert len(store.payloads) == before
