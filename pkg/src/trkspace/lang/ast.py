"""AST node definitions for the Trk guest language.

Every statement and expression carries the 1-based source line where it
starts.  One statement per line is enforced by the parser, so a statement's
line number doubles as its execution location.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# --- expressions ---

@dataclass
class Expr:
    line: int


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class NilLit(Expr):
    pass


@dataclass
class Name(Expr):
    ident: str


@dataclass
class ListLit(Expr):
    items: list[Expr] = field(default_factory=list)


@dataclass
class MapLit(Expr):
    # pairs of (string key, value expr), in source order
    pairs: list[tuple[str, Expr]] = field(default_factory=list)


@dataclass
class BinOp(Expr):
    op: str = ""
    left: Expr | None = None
    right: Expr | None = None


@dataclass
class UnaryOp(Expr):
    op: str = ""
    operand: Expr | None = None


@dataclass
class Index(Expr):
    base: Expr | None = None
    index: Expr | None = None


@dataclass
class Attr(Expr):
    # sugar: base.name is base["name"] on maps
    base: Expr | None = None
    name: str = ""


@dataclass
class Call(Expr):
    # calls are by name only; there are no function values
    func: str = ""
    args: list[Expr] = field(default_factory=list)


# --- statements ---

@dataclass
class Stmt:
    line: int


@dataclass
class Assign(Stmt):
    # target is a Name, Index or Attr expression
    target: Expr = None  # type: ignore[assignment]
    value: Expr = None  # type: ignore[assignment]


@dataclass
class GlobalDecl(Stmt):
    names: list[str] = field(default_factory=list)


@dataclass
class Return(Stmt):
    value: Expr | None = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class If(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    then_body: list[Stmt] = field(default_factory=list)
    else_body: list[Stmt] = field(default_factory=list)
    else_line: int | None = None


@dataclass
class While(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    body: list[Stmt] = field(default_factory=list)


@dataclass
class ForIn(Stmt):
    var: str = ""
    iterable: Expr = None  # type: ignore[assignment]
    body: list[Stmt] = field(default_factory=list)


# --- top-level structure ---

@dataclass
class MonitorPragma:
    line: int
    granularity: str = "function"  # "function" | "line"
    track: list[str] = field(default_factory=list)
    call_hooks: list[str] = field(default_factory=list)
    return_hooks: list[str] = field(default_factory=list)
    include: list[str] = field(default_factory=list)
    exclude: list[str] = field(default_factory=list)


@dataclass
class FunctionDef:
    name: str
    params: list[str]
    body: list[Stmt]
    line: int
    end_line: int
    pragma: MonitorPragma | None
    source_text: str  # exact source slice, pragma line excluded


@dataclass
class SourceUnit:
    path: str
    source: str
    functions: list[FunctionDef]
    top_level: list[Stmt]
