"""trkspace: record omniscient execution traces of Trk programs, then
explore them in time and space — inspect any past state, compare aligned
timelines, and replay with migrated state, mocked externals, or substituted
code."""

from .compare import StateDiff, align, compare_states, diff_code, view
from .hooks import default_hooks
from .lang.errors import TrkError, TrkRuntimeError, TrkSyntaxError
from .lang.interp import Env, Interpreter, make_default_env, register_builtin
from .lang.lower import Program, lower
from .lang.parser import parse
from .monitor import (
    TOP_LEVEL,
    MonitorError,
    MonitorSpec,
    RunResult,
    analyze_global_refs,
    run_monitored,
    specs_from_program,
)
from .replay import (
    MockSet,
    ReplayError,
    ReplayPlan,
    build_mocks,
    replay_from_snapshot,
    replay_function,
    replay_session,
)
from .runtime import load_event_script, make_env
from .store import Store, StoreError, import_stream, open_store

__version__ = "0.1.0"

__all__ = [
    "Env", "Interpreter", "MockSet", "MonitorError", "MonitorSpec",
    "Program", "ReplayError", "ReplayPlan", "RunResult", "StateDiff",
    "Store", "StoreError", "TOP_LEVEL", "TrkError", "TrkRuntimeError",
    "TrkSyntaxError", "align", "analyze_global_refs", "build_mocks",
    "compare_states", "default_hooks", "diff_code", "import_stream",
    "load_event_script", "lower", "make_default_env", "make_env",
    "open_store", "parse", "register_builtin", "replay_from_snapshot",
    "replay_function", "replay_session", "run_monitored",
    "specs_from_program", "view",
]
