"""Instrumentable interpreter for lowered Trk programs.

Execution always runs over the flat (jump-based) bodies, which makes
entry-line resume possible.  An InstrumentationSink receives call, line and
return events plus a notification after every named callable invocation;
a recorder builds traces from these, and replay installs mock overrides via
``call_overrides``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from .errors import TrkRuntimeError
from .lower import Entry, FlatBody, Program
from . import ast
from .values import (
    IdentityAllocator, NativeHandle, TrkList, TrkMap,
    check_int, content_equal, to_display, type_name,
)

MAX_CALL_DEPTH = 200


@dataclass
class Builtin:
    name: str
    kind: str  # "pure" | "external"
    fn: Callable  # fn(args: list, interp: Interpreter) -> value


@dataclass
class Env:
    globals: dict = field(default_factory=dict)
    builtins: dict[str, Builtin] = field(default_factory=dict)


def register_builtin(env: Env, name: str, kind: str, impl: Callable) -> None:
    if name in env.builtins:
        raise ValueError(f"builtin {name!r} already registered")
    if kind not in ("pure", "external"):
        raise ValueError(f"builtin kind must be 'pure' or 'external', got {kind!r}")
    env.builtins[name] = Builtin(name=name, kind=kind, fn=impl)


class InstrumentationSink:
    """No-op base; recorders override the callbacks they need."""

    def on_call(self, frame_id: int, fn_name: str, arg_items: list) -> None:
        pass

    def on_line(self, frame_id: int, fn_name: str, line_no: int, locals_map: dict) -> None:
        pass

    def on_return(self, frame_id: int, fn_name: str, value) -> None:
        pass

    def on_callable_result(self, name: str, args: list, result) -> None:
        pass


class _Frame:
    __slots__ = ("id", "flat", "locals", "hidden")

    def __init__(self, frame_id: int, flat: FlatBody, locals_: dict):
        self.id = frame_id
        self.flat = flat
        self.locals = locals_
        self.hidden: dict = {}  # for-loop iteration slots, never captured


class Interpreter:
    """Single-threaded interpreter instance; never share across threads."""

    def __init__(self, program: Program, env: Env, instr: InstrumentationSink | None = None):
        self.program = program
        self.env = env
        self.instr = instr
        self.idalloc = IdentityAllocator()
        # name -> fn(args) -> value; consulted before guest/builtin dispatch
        self.call_overrides: dict[str, Callable] = {}
        self._frame_ids = itertools.count(1)
        self._depth = 0

    # --- public entry points ---

    def call(self, fn_name: str, args: list, entry_line: int | None = None,
             preset_locals: dict | None = None):
        flat = self.program.flat.get(fn_name)
        if flat is None:
            raise TrkRuntimeError(f"unknown function {fn_name!r}")
        entry_index = 0
        if entry_line is None:
            if len(args) != len(flat.params):
                raise TrkRuntimeError(
                    f"{fn_name}() takes {len(flat.params)} arguments, got {len(args)}")
            locals_ = dict(zip(flat.params, args))
        else:
            if entry_line not in flat.line_index:
                raise TrkRuntimeError(
                    f"line {entry_line} is not a statement boundary in {fn_name}()")
            entry_index = flat.line_index[entry_line]
            locals_ = dict(preset_locals or {})
        return self._run(flat, locals_, entry_index)

    def run_top_level(self):
        top = self.program.top_level
        if top is None:
            return None
        return self._run(top, {}, 0)

    def new_handle(self, type_tag: str, payload) -> NativeHandle:
        return NativeHandle(type_tag, payload, self.idalloc.next_id())

    def new_list(self, items: list) -> TrkList:
        return TrkList(items, self.idalloc.next_id())

    def new_map(self, entries: dict) -> TrkMap:
        return TrkMap(entries, self.idalloc.next_id())

    # --- execution ---

    def _run(self, flat: FlatBody, locals_: dict, entry_index: int):
        if self._depth >= MAX_CALL_DEPTH:
            raise TrkRuntimeError("call depth limit exceeded")
        self._depth += 1
        frame = _Frame(next(self._frame_ids), flat, locals_)
        instr = self.instr
        if instr is not None and not flat.is_top_level:
            instr.on_call(frame.id, flat.name, list(locals_.items()))
        try:
            result = self._exec(flat, frame, entry_index)
        except TrkRuntimeError:
            self._depth -= 1
            raise
        self._depth -= 1
        if instr is not None and not flat.is_top_level:
            instr.on_return(frame.id, flat.name, result)
        return result

    def _exec(self, flat: FlatBody, frame: _Frame, pc: int):
        entries = flat.entries
        instr = self.instr
        while 0 <= pc < len(entries):
            e = entries[pc]
            if instr is not None and e.fires_line and not flat.is_top_level:
                instr.on_line(frame.id, flat.name, e.line, frame.locals)
            kind = e.kind
            if kind == "stmt":
                self._exec_simple(e.stmt, frame)
                pc += 1
            elif kind == "branch":
                cond = self._eval(e.expr, frame)
                if not isinstance(cond, bool):
                    raise TrkRuntimeError(
                        f"condition must be a bool, got {type_name(cond)}", e.line)
                pc = pc + 1 if cond else e.target
            elif kind == "return":
                value = self._eval(e.expr, frame) if e.expr is not None else None
                return value
            elif kind == "jump":
                pc = e.target
            elif kind == "for_init":
                iterable = self._eval(e.expr, frame)
                if not isinstance(iterable, TrkList):
                    raise TrkRuntimeError(
                        f"for-in requires a list, got {type_name(iterable)}", e.line)
                frame.hidden[e.slot] = [iterable, 0]
                pc += 1
            elif kind == "for_next":
                state = frame.hidden.get(e.slot)
                if state is None:
                    raise TrkRuntimeError(
                        "cannot resume execution inside a for-in loop", e.line)
                lst, i = state
                if i < len(lst.items):
                    state[1] = i + 1
                    self._store_name(e.var, lst.items[i], frame)
                    pc += 1
                else:
                    pc = e.target
            else:
                raise TrkRuntimeError(f"bad entry kind {kind!r}", e.line)
        return None

    def _exec_simple(self, s: ast.Stmt, frame: _Frame) -> None:
        if isinstance(s, ast.Assign):
            value = self._eval(s.value, frame)
            self._assign(s.target, value, frame)
        elif isinstance(s, ast.ExprStmt):
            self._eval(s.expr, frame)
        elif isinstance(s, ast.GlobalDecl):
            pass  # binding effect handled at lowering time
        else:
            raise TrkRuntimeError(f"bad simple statement {s!r}", s.line)

    # --- names ---

    def _load_name(self, name: str, frame: _Frame, line: int):
        flat = frame.flat
        if not flat.is_top_level and name in flat.local_names:
            if name in frame.locals:
                return frame.locals[name]
            raise TrkRuntimeError(f"local variable {name!r} read before assignment", line)
        if name in self.env.globals:
            return self.env.globals[name]
        raise TrkRuntimeError(f"undefined name {name!r}", line)

    def _store_name(self, name: str, value, frame: _Frame) -> None:
        flat = frame.flat
        if flat.is_top_level or name in flat.global_decls:
            self.env.globals[name] = value
        else:
            frame.locals[name] = value

    def _assign(self, target: ast.Expr, value, frame: _Frame) -> None:
        if isinstance(target, ast.Name):
            self._store_name(target.ident, value, frame)
            return
        if isinstance(target, ast.Index):
            base = self._eval(target.base, frame)
            index = self._eval(target.index, frame)
            if isinstance(base, TrkList):
                if not isinstance(index, int) or isinstance(index, bool):
                    raise TrkRuntimeError("list index must be an int", target.line)
                if not 0 <= index < len(base.items):
                    raise TrkRuntimeError(f"list index {index} out of range", target.line)
                base.items[index] = value
                return
            if isinstance(base, TrkMap):
                if not isinstance(index, str):
                    raise TrkRuntimeError("map key must be a string", target.line)
                base.entries[index] = value
                return
            raise TrkRuntimeError(
                f"cannot index-assign into {type_name(base)}", target.line)
        if isinstance(target, ast.Attr):
            base = self._eval(target.base, frame)
            if not isinstance(base, TrkMap):
                raise TrkRuntimeError(
                    f"attribute assignment requires a map, got {type_name(base)}",
                    target.line)
            base.entries[target.name] = value
            return
        raise TrkRuntimeError("invalid assignment target", target.line)

    # --- calls ---

    def call_named(self, name: str, args: list, line: int | None = None):
        """Dispatch a call by name: mock override, guest function, builtin."""
        override = self.call_overrides.get(name)
        if override is not None:
            result = override(args)
        elif name in self.program.flat:
            result = self.call(name, args)
        elif name in self.env.builtins:
            result = self.env.builtins[name].fn(args, self)
        else:
            raise TrkRuntimeError(f"unknown function {name!r}", line)
        if self.instr is not None:
            self.instr.on_callable_result(name, args, result)
        return result

    # --- expressions ---

    def _eval(self, e: ast.Expr, frame: _Frame):
        if isinstance(e, ast.IntLit):
            return e.value
        if isinstance(e, ast.FloatLit):
            return e.value
        if isinstance(e, ast.StrLit):
            return e.value
        if isinstance(e, ast.BoolLit):
            return e.value
        if isinstance(e, ast.NilLit):
            return None
        if isinstance(e, ast.Name):
            return self._load_name(e.ident, frame, e.line)
        if isinstance(e, ast.ListLit):
            return self.new_list([self._eval(x, frame) for x in e.items])
        if isinstance(e, ast.MapLit):
            return self.new_map({k: self._eval(v, frame) for k, v in e.pairs})
        if isinstance(e, ast.Call):
            args = [self._eval(a, frame) for a in e.args]
            return self.call_named(e.func, args, e.line)
        if isinstance(e, ast.Index):
            return self._eval_index(e, frame)
        if isinstance(e, ast.Attr):
            base = self._eval(e.base, frame)
            if not isinstance(base, TrkMap):
                raise TrkRuntimeError(
                    f"attribute access requires a map, got {type_name(base)}", e.line)
            if e.name not in base.entries:
                raise TrkRuntimeError(f"map has no key {e.name!r}", e.line)
            return base.entries[e.name]
        if isinstance(e, ast.UnaryOp):
            if e.op == "not":
                v = self._eval(e.operand, frame)
                if not isinstance(v, bool):
                    raise TrkRuntimeError(f"'not' requires a bool, got {type_name(v)}", e.line)
                return not v
            v = self._eval(e.operand, frame)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise TrkRuntimeError(f"unary '-' requires a number, got {type_name(v)}", e.line)
            if isinstance(v, int):
                return check_int(-v, e.line)
            return -v
        if isinstance(e, ast.BinOp):
            return self._eval_binop(e, frame)
        raise TrkRuntimeError(f"bad expression {e!r}", e.line)

    def _eval_index(self, e: ast.Index, frame: _Frame):
        base = self._eval(e.base, frame)
        index = self._eval(e.index, frame)
        if isinstance(base, TrkList):
            if not isinstance(index, int) or isinstance(index, bool):
                raise TrkRuntimeError("list index must be an int", e.line)
            if not 0 <= index < len(base.items):
                raise TrkRuntimeError(f"list index {index} out of range", e.line)
            return base.items[index]
        if isinstance(base, TrkMap):
            if not isinstance(index, str):
                raise TrkRuntimeError("map key must be a string", e.line)
            if index not in base.entries:
                raise TrkRuntimeError(f"map has no key {index!r}", e.line)
            return base.entries[index]
        if isinstance(base, str):
            if not isinstance(index, int) or isinstance(index, bool):
                raise TrkRuntimeError("string index must be an int", e.line)
            if not 0 <= index < len(base):
                raise TrkRuntimeError(f"string index {index} out of range", e.line)
            return base[index]
        raise TrkRuntimeError(f"cannot index {type_name(base)}", e.line)

    def _eval_binop(self, e: ast.BinOp, frame: _Frame):
        op = e.op
        if op in ("and", "or"):
            left = self._eval(e.left, frame)
            if not isinstance(left, bool):
                raise TrkRuntimeError(
                    f"{op!r} requires bools, got {type_name(left)}", e.line)
            if op == "and" and not left:
                return False
            if op == "or" and left:
                return True
            right = self._eval(e.right, frame)
            if not isinstance(right, bool):
                raise TrkRuntimeError(
                    f"{op!r} requires bools, got {type_name(right)}", e.line)
            return right
        left = self._eval(e.left, frame)
        right = self._eval(e.right, frame)
        if op == "==":
            return content_equal(left, right)
        if op == "!=":
            return not content_equal(left, right)
        if op in ("<", "<=", ">", ">="):
            return self._compare(op, left, right, e.line)
        return self._arith(op, left, right, e.line)

    def _compare(self, op: str, left, right, line: int):
        num_l = isinstance(left, (int, float)) and not isinstance(left, bool)
        num_r = isinstance(right, (int, float)) and not isinstance(right, bool)
        if not ((num_l and num_r) or (isinstance(left, str) and isinstance(right, str))):
            raise TrkRuntimeError(
                f"cannot order {type_name(left)} and {type_name(right)}", line)
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right

    def _arith(self, op: str, left, right, line: int):
        if op == "+":
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            if isinstance(left, TrkList) and isinstance(right, TrkList):
                return self.new_list(left.items + right.items)
        num_l = isinstance(left, (int, float)) and not isinstance(left, bool)
        num_r = isinstance(right, (int, float)) and not isinstance(right, bool)
        if not (num_l and num_r):
            raise TrkRuntimeError(
                f"cannot apply {op!r} to {type_name(left)} and {type_name(right)}", line)
        both_int = isinstance(left, int) and isinstance(right, int)
        if op in ("//", "%") and not both_int:
            raise TrkRuntimeError(f"{op!r} requires integer operands", line)
        try:
            if op == "+":
                result = left + right
            elif op == "-":
                result = left - right
            elif op == "*":
                result = left * right
            elif op == "/":
                result = left / right
            elif op == "//":
                result = left // right
            elif op == "%":
                result = left % right
            else:
                raise TrkRuntimeError(f"unknown operator {op!r}", line)
        except ZeroDivisionError:
            raise TrkRuntimeError("division by zero", line) from None
        if isinstance(result, int) and not isinstance(result, bool):
            check_int(result, line)
        return result


# --- default builtins ---

def _arity(args: list, n: int, name: str) -> None:
    if len(args) != n:
        raise TrkRuntimeError(f"{name}() takes {n} arguments, got {len(args)}")


def _bi_len(args, interp):
    _arity(args, 1, "len")
    v = args[0]
    if isinstance(v, TrkList):
        return len(v.items)
    if isinstance(v, TrkMap):
        return len(v.entries)
    if isinstance(v, str):
        return len(v)
    raise TrkRuntimeError(f"len() requires a list, map or string, got {type_name(v)}")


def _bi_push(args, interp):
    _arity(args, 2, "push")
    lst, v = args
    if not isinstance(lst, TrkList):
        raise TrkRuntimeError("push() requires a list")
    lst.items.append(v)
    return None


def _bi_pop(args, interp):
    _arity(args, 1, "pop")
    lst = args[0]
    if not isinstance(lst, TrkList) or not lst.items:
        raise TrkRuntimeError("pop() requires a non-empty list")
    return lst.items.pop()


def _bi_remove_at(args, interp):
    _arity(args, 2, "remove_at")
    lst, i = args
    if not isinstance(lst, TrkList) or not isinstance(i, int) or isinstance(i, bool):
        raise TrkRuntimeError("remove_at() requires a list and an int index")
    if not 0 <= i < len(lst.items):
        raise TrkRuntimeError(f"remove_at index {i} out of range")
    return lst.items.pop(i)


def _bi_keys(args, interp):
    _arity(args, 1, "keys")
    m = args[0]
    if not isinstance(m, TrkMap):
        raise TrkRuntimeError("keys() requires a map")
    return interp.new_list(sorted(m.entries.keys()))


def _bi_has(args, interp):
    _arity(args, 2, "has")
    m, k = args
    if not isinstance(m, TrkMap) or not isinstance(k, str):
        raise TrkRuntimeError("has() requires a map and a string key")
    return k in m.entries


def _bi_range(args, interp):
    if len(args) == 1:
        start, stop = 0, args[0]
    elif len(args) == 2:
        start, stop = args
    else:
        raise TrkRuntimeError("range() takes 1 or 2 arguments")
    for v in (start, stop):
        if not isinstance(v, int) or isinstance(v, bool):
            raise TrkRuntimeError("range() requires int arguments")
    return interp.new_list(list(range(start, stop)))


def _bi_abs(args, interp):
    _arity(args, 1, "abs")
    v = args[0]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TrkRuntimeError("abs() requires a number")
    result = abs(v)
    if isinstance(result, int):
        check_int(result)
    return result


def _bi_min(args, interp):
    _arity(args, 2, "min")
    return args[0] if args[0] <= args[1] else args[1]


def _bi_max(args, interp):
    _arity(args, 2, "max")
    return args[0] if args[0] >= args[1] else args[1]


def _bi_str(args, interp):
    _arity(args, 1, "str")
    return to_display(args[0])


def _bi_copy(args, interp):
    _arity(args, 1, "copy")
    v = args[0]
    if isinstance(v, TrkList):
        return interp.new_list(list(v.items))
    if isinstance(v, TrkMap):
        return interp.new_map(dict(v.entries))
    return v


def _bi_print(args, interp):
    print(" ".join(to_display(a) for a in args))
    return None


def make_default_env() -> Env:
    """Env with the pure builtin library; external builtins are host-supplied."""
    env = Env()
    for name, fn in [
        ("len", _bi_len), ("push", _bi_push), ("pop", _bi_pop),
        ("remove_at", _bi_remove_at), ("keys", _bi_keys), ("has", _bi_has),
        ("range", _bi_range), ("abs", _bi_abs), ("min", _bi_min),
        ("max", _bi_max), ("str", _bi_str), ("copy", _bi_copy),
        ("print", _bi_print),
    ]:
        register_builtin(env, name, "pure", fn)
    return env
