"""Lowering from the Trk AST to flat, jump-based bodies.

The flat form exists so execution can resume at an arbitrary statement line
(goto-style entry) and so back-edges are explicit.  Executing a FlatBody is
observationally identical to walking the AST.

Entry kinds:

    stmt      execute a simple statement (assign / expr / global decl)
    return    evaluate optional expr and return
    branch    evaluate condition, jump to ``target`` when false
    jump      unconditional jump (synthetic, no line event)
    for_init  evaluate iterable, set up hidden loop state (synthetic)
    for_next  advance loop variable or jump to ``target`` when exhausted
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast


@dataclass
class Entry:
    kind: str
    line: int
    stmt: ast.Stmt | None = None
    expr: ast.Expr | None = None
    target: int = -1
    var: str = ""
    slot: str = ""
    fires_line: bool = True


@dataclass
class FlatBody:
    name: str
    params: list[str]
    entries: list[Entry]
    line_index: dict[int, int]
    local_names: set[str]
    global_decls: set[str]
    func: ast.FunctionDef | None = None
    is_top_level: bool = False


@dataclass
class Program:
    units: list[ast.SourceUnit]
    flat: dict[str, FlatBody]
    top_level: FlatBody | None = None

    @property
    def unit(self) -> ast.SourceUnit:
        return self.units[0]

    def function(self, name: str) -> ast.FunctionDef | None:
        fb = self.flat.get(name)
        return fb.func if fb else None


def _collect_bindings(body: list[ast.Stmt]) -> tuple[set[str], set[str]]:
    """Names bound by plain assignment or for-in, and names declared global."""
    assigned: set[str] = set()
    globals_: set[str] = set()

    def walk(stmts: list[ast.Stmt]) -> None:
        for s in stmts:
            if isinstance(s, ast.Assign) and isinstance(s.target, ast.Name):
                assigned.add(s.target.ident)
            elif isinstance(s, ast.GlobalDecl):
                globals_.update(s.names)
            elif isinstance(s, ast.If):
                walk(s.then_body)
                walk(s.else_body)
            elif isinstance(s, (ast.While, ast.ForIn)):
                if isinstance(s, ast.ForIn):
                    assigned.add(s.var)
                walk(s.body)

    walk(body)
    return assigned - globals_, globals_


class _BodyLowerer:
    def __init__(self) -> None:
        self.entries: list[Entry] = []
        self._slot_counter = 0

    def emit(self, entry: Entry) -> int:
        self.entries.append(entry)
        return len(self.entries) - 1

    def lower_stmts(self, stmts: list[ast.Stmt]) -> None:
        for s in stmts:
            self.lower_stmt(s)

    def lower_stmt(self, s: ast.Stmt) -> None:
        if isinstance(s, (ast.Assign, ast.ExprStmt, ast.GlobalDecl)):
            self.emit(Entry(kind="stmt", line=s.line, stmt=s))
        elif isinstance(s, ast.Return):
            self.emit(Entry(kind="return", line=s.line, expr=s.value))
        elif isinstance(s, ast.If):
            branch_idx = self.emit(Entry(kind="branch", line=s.line, expr=s.cond))
            self.lower_stmts(s.then_body)
            if s.else_body:
                jump_idx = self.emit(Entry(kind="jump", line=s.line, fires_line=False))
                self.entries[branch_idx].target = len(self.entries)
                self.lower_stmts(s.else_body)
                self.entries[jump_idx].target = len(self.entries)
            else:
                self.entries[branch_idx].target = len(self.entries)
        elif isinstance(s, ast.While):
            head = len(self.entries)
            branch_idx = self.emit(Entry(kind="branch", line=s.line, expr=s.cond))
            self.lower_stmts(s.body)
            self.emit(Entry(kind="jump", line=s.line, target=head, fires_line=False))
            self.entries[branch_idx].target = len(self.entries)
        elif isinstance(s, ast.ForIn):
            slot = f"$for{self._slot_counter}"
            self._slot_counter += 1
            self.emit(Entry(kind="for_init", line=s.line, expr=s.iterable,
                            slot=slot, fires_line=False))
            head = len(self.entries)
            next_idx = self.emit(Entry(kind="for_next", line=s.line, var=s.var, slot=slot))
            self.lower_stmts(s.body)
            self.emit(Entry(kind="jump", line=s.line, target=head, fires_line=False))
            self.entries[next_idx].target = len(self.entries)
        else:
            raise TypeError(f"unknown statement {s!r}")


def _lower_body(name: str, params: list[str], body: list[ast.Stmt],
                func: ast.FunctionDef | None, is_top_level: bool) -> FlatBody:
    low = _BodyLowerer()
    low.lower_stmts(body)
    entries = low.entries
    line_index: dict[int, int] = {}
    for idx, e in enumerate(entries):
        if e.line not in line_index:
            line_index[e.line] = idx
    assigned, global_decls = _collect_bindings(body)
    local_names = set(params) | assigned
    if is_top_level:
        local_names = set()
    return FlatBody(name=name, params=params, entries=entries, line_index=line_index,
                    local_names=local_names, global_decls=global_decls,
                    func=func, is_top_level=is_top_level)


def lower(unit: ast.SourceUnit) -> Program:
    """Lower a parsed unit into a Program with flat bodies for all functions."""
    flat: dict[str, FlatBody] = {}
    for fn in unit.functions:
        flat[fn.name] = _lower_body(fn.name, fn.params, fn.body, fn, False)
    top = None
    if unit.top_level:
        top = _lower_body("__main__", [], unit.top_level, None, True)
    return Program(units=[unit], flat=flat, top_level=top)
