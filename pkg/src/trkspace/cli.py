"""Command-line interface.

Recording, replay, inspection and interchange use the engine library
directly against a store file; ``serve`` exposes the same store over HTTP
for interactive clients.  The store file path comes from ``--db`` or the
``TRKSPACE_DB`` environment variable.

Exit codes: 0 success, 1 engine error (parse/runtime/replay/store),
2 usage error.
"""

from __future__ import annotations

import functools
import importlib.resources
import json
import sys

import click

from .compare import align, compare_states, view
from .hooks import default_hooks
from .lang.errors import TrkError
from .lang.lower import lower
from .lang.parser import parse
from .monitor import TOP_LEVEL, run_monitored, specs_from_program
from .replay import ReplayPlan, replay_from_snapshot, replay_function, replay_session
from .runtime import load_event_script, make_env
from .store import StoreError, import_stream, open_store


def _read_program(spec: str) -> tuple[str, str]:
    """Resolve a program argument: a file path or ``demo:<name>``."""
    if spec.startswith("demo:"):
        name = spec.split(":", 1)[1]
        ref = importlib.resources.files("trkspace.demos") / f"{name}.trk"
        if not ref.is_file():
            raise click.UsageError(f"unknown demo {name!r}")
        return ref.read_text(encoding="utf-8"), f"{name}.trk"
    try:
        with open(spec, encoding="utf-8") as f:
            return f.read(), spec
    except OSError as exc:
        raise click.UsageError(f"cannot read program: {exc}")


def _demo_events(name: str) -> str | None:
    ref = importlib.resources.files("trkspace.demos") / f"{name}.events"
    return str(ref) if ref.is_file() else None


def engine_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (TrkError, StoreError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def _require_db(db: str | None) -> str:
    if not db:
        raise click.UsageError("no store given: pass --db or set TRKSPACE_DB")
    return db


def _dump(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True, default=str))


@click.group()
@click.option("--db", envvar="TRKSPACE_DB", default=None,
              help="Path to the trace store file.")
@click.pass_context
def main(ctx, db):
    """Record, explore and replay omniscient execution traces."""
    ctx.obj = db


@main.command()
@click.argument("program")
@click.option("--label", default=None, help="Session label.")
@click.option("--seed", default=0, show_default=True,
              help="Seed for rand_int.")
@click.option("--events", "events_path", default=None,
              help="Event-script file for external callables.")
@click.pass_obj
@engine_errors
def run(db, program, label, seed, events_path):
    """Run PROGRAM (a path or demo:NAME) under monitoring."""
    source, path = _read_program(program)
    if events_path is None and program.startswith("demo:"):
        events_path = _demo_events(program.split(":", 1)[1])
    queues = load_event_script(events_path) if events_path else None
    prog = lower(parse(source, path))
    store = open_store(_require_db(db))
    env = make_env(seed=seed, event_queues=queues)
    result = run_monitored(prog, TOP_LEVEL, env, specs_from_program(prog),
                           default_hooks(), store, label or path)
    store.save()
    _dump({"session": result.session_id, "calls": result.calls,
           "snapshots": result.snapshots, "events": result.events,
           "skipped_values": result.skipped_values, "error": result.error})
    if result.error:
        sys.exit(1)


def _parse_migrate(spec: str) -> tuple[str, set[str]]:
    if spec == "all":
        return "all", set()
    for mode in ("only", "except"):
        if spec.startswith(mode + ":"):
            names = {n for n in spec[len(mode) + 1:].split(",") if n}
            return mode, names
    raise click.UsageError(
        f"bad --migrate {spec!r}: use all, only:a,b or except:a,b")


def _parse_sets(pairs: tuple[str, ...]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.UsageError(f"bad --set {pair!r}: use name=value")
        name, raw = pair.split("=", 1)
        try:
            out[name] = json.loads(raw)
        except json.JSONDecodeError:
            out[name] = raw
    return out


@main.command()
@click.option("--session", "session_id", type=int, default=None)
@click.option("--call", "call_id", type=int, default=None)
@click.option("--snapshot", "snapshot_id", type=int, default=None)
@click.option("--window", default=None, help="Inclusive ordinal range a:b.")
@click.option("--mock", "mocks", multiple=True,
              help="Callable to answer from recorded events (repeatable).")
@click.option("--migrate", default="all", show_default=True,
              help="Global migration: all, only:a,b or except:a,b.")
@click.option("--set", "sets", multiple=True,
              help="Manual global override name=value (repeatable).")
@click.option("--code", "code_path", default=None,
              help="File of replacement function definitions.")
@click.option("--seed", default=0, show_default=True)
@click.option("--label", default=None)
@click.pass_obj
@engine_errors
def replay(db, session_id, call_id, snapshot_id, window, mocks, migrate,
           sets, code_path, seed, label):
    """Re-execute a recorded session, call, or snapshot resume point."""
    targets = [t for t in (session_id, call_id, snapshot_id) if t is not None]
    if len(targets) != 1:
        raise click.UsageError(
            "pick exactly one of --session, --call, --snapshot")
    win = None
    if window is not None:
        try:
            a, b = window.split(":")
            win = (int(a), int(b))
        except ValueError:
            raise click.UsageError(f"bad --window {window!r}: use start:end")
    overrides = {}
    if code_path:
        with open(code_path, encoding="utf-8") as f:
            text = f.read()
        for fn in parse(text, code_path).functions:
            start = (fn.pragma.line if fn.pragma else fn.line) - 1
            overrides[fn.name] = "\n".join(
                text.split("\n")[start:fn.end_line])
    mode, names = _parse_migrate(migrate)
    plan = ReplayPlan(window=win, migrate=mode, migrate_names=names,
                      manual_globals=_parse_sets(sets), mocked=set(mocks),
                      code_override=overrides)
    store = open_store(_require_db(db))
    env = make_env(seed=seed)
    if session_id is not None:
        result = replay_session(store, session_id, plan, env, default_hooks(),
                                label=label)
    elif call_id is not None:
        result = replay_function(store, call_id, plan, env, default_hooks(),
                                 label=label)
    else:
        result = replay_from_snapshot(store, snapshot_id, plan, env,
                                      default_hooks(), label=label)
    store.save()
    _dump({"session": result.session_id, "calls": result.calls,
           "snapshots": result.snapshots, "events": result.events,
           "error": result.error})
    if result.error:
        sys.exit(1)


@main.command()
@click.option("--sessions", "list_sessions", is_flag=True)
@click.option("--session", "session_id", type=int, default=None)
@click.option("--call", "call_id", type=int, default=None)
@click.option("--snapshot", "snapshot_id", type=int, default=None)
@click.option("--trace", "trace_call", type=int, default=None,
              help="List the snapshots of a call.")
@click.option("--facet", default="V", show_default=True,
              type=click.Choice(["V", "E", "C", "hooks"]))
@click.pass_obj
@engine_errors
def inspect(db, list_sessions, session_id, call_id, snapshot_id, trace_call,
            facet):
    """Inspect recorded sessions, calls and snapshots."""
    store = open_store(_require_db(db))
    if list_sessions:
        _dump([vars(s) for s in sorted(store.sessions.values(),
                                       key=lambda s: s.id)])
    elif session_id is not None:
        calls = store.get_calls(session=session_id)
        _dump([{"id": c.id, "ordinal": c.ordinal, "function": c.function,
                "parent_call": c.parent_call} for c in calls])
    elif call_id is not None:
        _dump(view(store, "call", call_id, facet))
    elif snapshot_id is not None:
        _dump(view(store, "snapshot", snapshot_id, facet))
    elif trace_call is not None:
        _dump([{"id": s.id, "ordinal": s.ordinal, "line_no": s.line_no}
               for s in store.get_trace(trace_call)])
    else:
        raise click.UsageError("nothing to inspect: pass a selector flag")


@main.command()
@click.option("--kind", default="call", show_default=True,
              type=click.Choice(["call", "snapshot"]))
@click.argument("a", type=int)
@click.argument("b", type=int)
@click.pass_obj
@engine_errors
def compare(db, kind, a, b):
    """Compare two recorded states (variables, events, code, hooks)."""
    store = open_store(_require_db(db))
    _dump(compare_states(store, kind, a, kind, b).to_record())


@main.command(name="align")
@click.option("--session-a", type=int, required=True)
@click.option("--session-b", type=int, required=True)
@click.option("--window-a", default=None, help="Inclusive ordinal range a:b.")
@click.option("--window-b", default=None, help="Inclusive ordinal range a:b.")
@click.pass_obj
@engine_errors
def align_cmd(db, session_a, session_b, window_a, window_b):
    """Align the timelines of two sessions call-by-call."""
    def parse_window(spec):
        if spec is None:
            return None
        a, b = spec.split(":")
        return (int(a), int(b))

    store = open_store(_require_db(db))
    pairs = align(store, session_a, session_b, parse_window(window_a),
                  parse_window(window_b))
    _dump([{"a": p.a, "b": p.b, "snapshots": p.snapshots} for p in pairs])


@main.command(name="export")
@click.option("-o", "--output", default=None, help="Write to a file.")
@click.pass_obj
@engine_errors
def export_cmd(db, output):
    """Write the store as a canonical interchange stream."""
    store = open_store(_require_db(db))
    stream = store.export_stream()
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(stream)
    else:
        click.echo(stream, nl=False)


@main.command(name="import")
@click.argument("stream_file")
@click.pass_obj
@engine_errors
def import_cmd(db, stream_file):
    """Load an interchange stream into a new store file."""
    db = _require_db(db)
    with open(stream_file, encoding="utf-8") as f:
        store = import_stream(f.read(), path=db)
    store.save()
    _dump({"sessions": len(store.sessions), "calls": len(store.calls)})


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
@click.pass_obj
@engine_errors
def serve(db, host, port):
    """Serve the store over HTTP and WebSocket."""
    import uvicorn

    from .service import create_app

    store = open_store(_require_db(db))
    uvicorn.run(create_app(store), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
