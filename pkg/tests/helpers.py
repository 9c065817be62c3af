"""Shared test helpers.

Contains an independent AST-walking evaluator used as the oracle for the
flat executor (results and executed-line counting), plus a seeded random
program generator for differential corpora.  The oracle deliberately avoids
the lowering pass and the flat execution loop.
"""

from __future__ import annotations

import random

from trkspace.lang import ast
from trkspace.lang.parser import parse
from trkspace.lang.values import IdentityAllocator, TrkList, TrkMap

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


class OracleError(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Shim:
    """Minimal stand-in so the default builtin impls can allocate values."""

    def __init__(self):
        self.idalloc = IdentityAllocator()

    def new_list(self, items):
        return TrkList(items, self.idalloc.next_id())

    def new_map(self, entries):
        return TrkMap(entries, self.idalloc.next_id())


class OracleEval:
    """Recursive AST evaluator with its own line-event accounting.

    Line events fire with the same policy the engine documents: one per
    simple statement, one per if check, one per while check (including the
    failing one), one per for-in check (including exhaustion).
    """

    def __init__(self, unit: ast.SourceUnit, builtins: dict | None = None):
        self.unit = unit
        self.functions = {f.name: f for f in unit.functions}
        self.globals: dict = {}
        self.builtins = builtins or {}
        self.shim = _Shim()
        self.line_events: list[tuple[str, int]] = []

    # --- driving ---

    def run_top_level(self):
        for stmt in self.unit.top_level:
            self._exec(stmt, None)

    def call(self, name: str, args: list):
        fn = self.functions.get(name)
        if fn is None:
            raise OracleError(f"unknown function {name}")
        if len(args) != len(fn.params):
            raise OracleError("arity mismatch")
        frame = {"name": name, "locals": dict(zip(fn.params, args)),
                 "global_decls": self._global_decls(fn.body)}
        try:
            for stmt in fn.body:
                self._exec(stmt, frame)
        except _Return as r:
            return r.value
        return None

    def _global_decls(self, body):
        found = set()

        def walk(stmts):
            for s in stmts:
                if isinstance(s, ast.GlobalDecl):
                    found.update(s.names)
                elif isinstance(s, ast.If):
                    walk(s.then_body)
                    walk(s.else_body)
                elif isinstance(s, (ast.While, ast.ForIn)):
                    walk(s.body)

        walk(body)
        return found

    def _fire(self, frame, line):
        if frame is not None:
            self.line_events.append((frame["name"], line))

    # --- statements ---

    def _exec(self, s, frame):
        if isinstance(s, (ast.Assign, ast.ExprStmt, ast.GlobalDecl, ast.Return)):
            self._fire(frame, s.line)
            if isinstance(s, ast.Assign):
                self._assign(s.target, self._eval(s.value, frame), frame)
            elif isinstance(s, ast.ExprStmt):
                self._eval(s.expr, frame)
            elif isinstance(s, ast.Return):
                raise _Return(self._eval(s.value, frame) if s.value else None)
        elif isinstance(s, ast.If):
            self._fire(frame, s.line)
            if self._truth(self._eval(s.cond, frame)):
                for sub in s.then_body:
                    self._exec(sub, frame)
            else:
                for sub in s.else_body:
                    self._exec(sub, frame)
        elif isinstance(s, ast.While):
            while True:
                self._fire(frame, s.line)
                if not self._truth(self._eval(s.cond, frame)):
                    break
                for sub in s.body:
                    self._exec(sub, frame)
        elif isinstance(s, ast.ForIn):
            seq = self._eval(s.iterable, frame)
            if not isinstance(seq, TrkList):
                raise OracleError("for-in requires a list")
            i = 0
            while True:
                self._fire(frame, s.line)
                if i >= len(seq.items):
                    break
                self._bind(s.var, seq.items[i], frame)
                for sub in s.body:
                    self._exec(sub, frame)
                i += 1
        else:
            raise OracleError(f"unknown stmt {s}")

    def _truth(self, v):
        if not isinstance(v, bool):
            raise OracleError("condition must be bool")
        return v

    def _bind(self, name, value, frame):
        if frame is None or name in frame["global_decls"]:
            self.globals[name] = value
        else:
            frame["locals"][name] = value

    def _assign(self, target, value, frame):
        if isinstance(target, ast.Name):
            self._bind(target.ident, value, frame)
        elif isinstance(target, ast.Index):
            base = self._eval(target.base, frame)
            idx = self._eval(target.index, frame)
            if isinstance(base, TrkList):
                base.items[idx] = value
            elif isinstance(base, TrkMap):
                base.entries[idx] = value
            else:
                raise OracleError("bad index assign")
        elif isinstance(target, ast.Attr):
            base = self._eval(target.base, frame)
            base.entries[target.name] = value
        else:
            raise OracleError("bad target")

    # --- expressions ---

    def _eval(self, e, frame):
        if isinstance(e, (ast.IntLit, ast.FloatLit, ast.StrLit, ast.BoolLit)):
            return e.value
        if isinstance(e, ast.NilLit):
            return None
        if isinstance(e, ast.Name):
            if frame is not None and e.ident in frame["locals"]:
                return frame["locals"][e.ident]
            if e.ident in self.globals:
                return self.globals[e.ident]
            raise OracleError(f"undefined {e.ident}")
        if isinstance(e, ast.ListLit):
            return self.shim.new_list([self._eval(x, frame) for x in e.items])
        if isinstance(e, ast.MapLit):
            return self.shim.new_map({k: self._eval(v, frame) for k, v in e.pairs})
        if isinstance(e, ast.Call):
            args = [self._eval(a, frame) for a in e.args]
            if e.func in self.functions:
                return self.call(e.func, args)
            if e.func in self.builtins:
                return self.builtins[e.func](args, self.shim)
            raise OracleError(f"unknown function {e.func}")
        if isinstance(e, ast.Index):
            base = self._eval(e.base, frame)
            idx = self._eval(e.index, frame)
            if isinstance(base, TrkList):
                if not 0 <= idx < len(base.items):
                    raise OracleError("index out of range")
                return base.items[idx]
            if isinstance(base, TrkMap):
                return base.entries[idx]
            if isinstance(base, str):
                return base[idx]
            raise OracleError("bad index")
        if isinstance(e, ast.Attr):
            return self._eval(e.base, frame).entries[e.name]
        if isinstance(e, ast.UnaryOp):
            v = self._eval(e.operand, frame)
            if e.op == "not":
                return not v
            return self._ovf(-v)
        if isinstance(e, ast.BinOp):
            return self._binop(e, frame)
        raise OracleError(f"unknown expr {e}")

    def _ovf(self, v):
        if isinstance(v, int) and not isinstance(v, bool) and not INT_MIN <= v <= INT_MAX:
            raise OracleError("overflow")
        return v

    def _binop(self, e, frame):
        op = e.op
        if op == "and":
            return self._truth(self._eval(e.left, frame)) and self._truth(self._eval(e.right, frame))
        if op == "or":
            return self._truth(self._eval(e.left, frame)) or self._truth(self._eval(e.right, frame))
        left = self._eval(e.left, frame)
        right = self._eval(e.right, frame)
        if op == "==":
            return self._deep_eq(left, right)
        if op == "!=":
            return not self._deep_eq(left, right)
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        if op == "+":
            if isinstance(left, str):
                return left + right
            if isinstance(left, TrkList):
                return self.shim.new_list(left.items + right.items)
            return self._ovf(left + right)
        if op == "-":
            return self._ovf(left - right)
        if op == "*":
            return self._ovf(left * right)
        if op == "/":
            if right == 0:
                raise OracleError("division by zero")
            return left / right
        if op == "//":
            if right == 0:
                raise OracleError("division by zero")
            return self._ovf(left // right)
        if op == "%":
            if right == 0:
                raise OracleError("division by zero")
            return left % right
        raise OracleError(f"unknown op {op}")

    def _deep_eq(self, a, b):
        if isinstance(a, TrkList) and isinstance(b, TrkList):
            return len(a.items) == len(b.items) and all(
                self._deep_eq(x, y) for x, y in zip(a.items, b.items))
        if isinstance(a, TrkMap) and isinstance(b, TrkMap):
            return a.entries.keys() == b.entries.keys() and all(
                self._deep_eq(a.entries[k], b.entries[k]) for k in a.entries)
        if type(a) is not type(b):
            return False
        return a == b


def oracle_for(source: str, builtins: dict | None = None) -> OracleEval:
    return OracleEval(parse(source), builtins)


# --- random program generator for differential testing ---

MOVE_PLAYER = """\
def move_player(x, y, player):
    player.x = x
    player.y = y
    if y < 0 or y > 600:
        return false
    if x < 0 or x > 800:
        return false
    return true
"""

BINARY_SEARCH = """\
@monitor(granularity="line")
def binary_search(items, target):
    left = 0
    right = len(items) - 1
    while left <= right:
        mid = (left + right) // 2
        if items[mid] == target:
            return mid
        if items[mid] < target:
            left = mid + 1
        else:
            right = mid - 1
    return -1
"""


class ProgramGenerator:
    """Generates small deterministic Trk functions for differential tests.

    Only reads variables already assigned, so the flat executor and the
    oracle agree on scoping.  Loops are bounded by construction.
    """

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def generate(self) -> str:
        rng = self.rng
        self.vars = ["a", "b"]
        self.protected: set[str] = set()
        self.counter = 0
        lines = ["def f(a, b):"]
        body = self._block(depth=0, budget=rng.randint(4, 10))
        lines.extend("    " + ln for ln in body)
        lines.append("    return " + self._expr())
        return "\n".join(lines) + "\n"

    def _fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def _expr(self) -> str:
        rng = self.rng
        kind = rng.random()
        if kind < 0.35 or not self.vars:
            return str(rng.randint(-50, 50))
        if kind < 0.7:
            return rng.choice(self.vars)
        op = rng.choice(["+", "-", "*", "%", "//"])
        left = rng.choice(self.vars)
        if op in ("%", "//"):
            return f"({left} {op} {rng.randint(1, 9)})"
        return f"({left} {op} {rng.randint(-9, 9)})"

    def _cond(self) -> str:
        rng = self.rng
        op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return f"{rng.choice(self.vars)} {op} {rng.randint(-20, 20)}"

    def _block(self, depth: int, budget: int) -> list[str]:
        rng = self.rng
        lines: list[str] = []
        while budget > 0:
            choice = rng.random()
            if choice < 0.5 or depth >= 2:
                candidates = [v for v in self.vars if v not in self.protected]
                var = self._fresh() if rng.random() < 0.5 or not candidates \
                    else rng.choice(candidates)
                lines.append(f"{var} = {self._expr()}")
                if var not in self.vars:
                    self.vars.append(var)
                budget -= 1
            elif choice < 0.7:
                lines.append(f"if {self._cond()}:")
                inner = self._block(depth + 1, max(1, budget // 2))
                lines.extend("    " + ln for ln in inner)
                if rng.random() < 0.5:
                    lines.append("else:")
                    inner = self._block(depth + 1, max(1, budget // 3))
                    lines.extend("    " + ln for ln in inner)
                budget -= 2
            elif choice < 0.85:
                i = self._fresh()
                self.vars.append(i)
                self.protected.add(i)
                lines.append(f"{i} = 0")
                lines.append(f"while {i} < {rng.randint(1, 6)}:")
                inner = self._block(depth + 1, max(1, budget // 2))
                inner.append(f"{i} = {i} + 1")
                lines.extend("    " + ln for ln in inner)
                budget -= 2
            else:
                x = self._fresh()
                self.vars.append(x)
                n = rng.randint(0, 5)
                lines.append(f"for {x} in range({n}):")
                inner = self._block(depth + 1, max(1, budget // 2))
                lines.extend("    " + ln for ln in inner)
                budget -= 2
        return lines or [f"{rng.choice(self.vars)} = {self._expr()}"]
