"""Recursive-descent parser for Trk.

Grammar sketch (one statement per source line, blocks by indentation):

    unit      := (pragma? funcdef | stmt)*
    pragma    := "@" "monitor" "(" kwargs ")" NEWLINE
    funcdef   := "def" NAME "(" params ")" ":" block
    stmt      := assign | "global" names | "return" expr? | exprstmt
               | "if" expr ":" block ("else" ":" block)?
               | "while" expr ":" block
               | "for" NAME "in" expr ":" block
    expr      := or-expr with the usual precedence; calls are by name only
"""

from __future__ import annotations

from . import ast
from .errors import TrkSyntaxError
from .lexer import Token, tokenize


class _Parser:
    def __init__(self, tokens: list[Token], source_lines: list[str]):
        self.tokens = tokens
        self.pos = 0
        self.source_lines = source_lines

    # --- token helpers ---

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def check(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def match(self, kind: str, value: str | None = None) -> Token | None:
        if self.check(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if not self.check(kind, value):
            want = value if value is not None else kind
            raise TrkSyntaxError(f"expected {want!r}, got {tok.value or tok.kind!r}",
                                 tok.line, tok.column)
        return self.advance()

    def end_statement(self) -> None:
        self.expect("NEWLINE")

    # --- unit ---

    def parse_unit(self, path: str, source: str) -> ast.SourceUnit:
        functions: list[ast.FunctionDef] = []
        top_level: list[ast.Stmt] = []
        seen: set[str] = set()
        while not self.check("EOF"):
            if self.check("OP", "@"):
                pragma = self.parse_pragma()
                if not self.check("KEYWORD", "def"):
                    tok = self.peek()
                    raise TrkSyntaxError("monitor pragma must precede a function definition",
                                         tok.line, tok.column)
                fn = self.parse_funcdef(pragma)
                if fn.name in seen:
                    raise TrkSyntaxError(f"duplicate function name {fn.name!r}", fn.line)
                seen.add(fn.name)
                functions.append(fn)
            elif self.check("KEYWORD", "def"):
                fn = self.parse_funcdef(None)
                if fn.name in seen:
                    raise TrkSyntaxError(f"duplicate function name {fn.name!r}", fn.line)
                seen.add(fn.name)
                functions.append(fn)
            else:
                top_level.append(self.parse_statement())
        return ast.SourceUnit(path=path, source=source, functions=functions,
                              top_level=top_level)

    def parse_pragma(self) -> ast.MonitorPragma:
        at = self.expect("OP", "@")
        name = self.expect("NAME")
        if name.value != "monitor":
            raise TrkSyntaxError(f"unknown pragma {name.value!r}", name.line, name.column)
        pragma = ast.MonitorPragma(line=at.line)
        self.expect("OP", "(")
        while not self.check("OP", ")"):
            key = self.expect("NAME")
            self.expect("OP", "=")
            if key.value == "granularity":
                val = self.expect("STRING")
                if val.value not in ("function", "line"):
                    raise TrkSyntaxError("granularity must be \"function\" or \"line\"",
                                         val.line, val.column)
                pragma.granularity = val.value
            elif key.value in ("track", "include", "exclude"):
                setattr(pragma, key.value, self._pragma_name_list())
            elif key.value in ("call_hook", "return_hook"):
                val = self.expect("STRING")
                getattr(pragma, key.value + "s").append(val.value)
            else:
                raise TrkSyntaxError(f"unknown pragma option {key.value!r}",
                                     key.line, key.column)
            if not self.match("OP", ","):
                break
        self.expect("OP", ")")
        self.end_statement()
        return pragma

    def _pragma_name_list(self) -> list[str]:
        self.expect("OP", "[")
        names: list[str] = []
        while not self.check("OP", "]"):
            tok = self.peek()
            if tok.kind in ("NAME", "STRING"):
                names.append(self.advance().value)
            else:
                raise TrkSyntaxError("expected a name", tok.line, tok.column)
            if not self.match("OP", ","):
                break
        self.expect("OP", "]")
        return names

    def parse_funcdef(self, pragma: ast.MonitorPragma | None) -> ast.FunctionDef:
        def_tok = self.expect("KEYWORD", "def")
        name = self.expect("NAME")
        self.expect("OP", "(")
        params: list[str] = []
        while not self.check("OP", ")"):
            params.append(self.expect("NAME").value)
            if not self.match("OP", ","):
                break
        self.expect("OP", ")")
        body, end_line = self.parse_block()
        source_text = "\n".join(self.source_lines[def_tok.line - 1:end_line])
        return ast.FunctionDef(name=name.value, params=params, body=body,
                               line=def_tok.line, end_line=end_line,
                               pragma=pragma, source_text=source_text)

    def parse_block(self) -> tuple[list[ast.Stmt], int]:
        """Parse ':' NEWLINE INDENT stmt+ DEDENT; returns (body, last line)."""
        colon = self.expect("OP", ":")
        if not self.check("NEWLINE"):
            tok = self.peek()
            raise TrkSyntaxError("block must start on the next line (one statement per line)",
                                 tok.line, tok.column)
        self.advance()
        self.expect("INDENT")
        body: list[ast.Stmt] = []
        end_line = colon.line
        while not self.check("DEDENT"):
            stmt = self.parse_statement()
            body.append(stmt)
            end_line = max(end_line, _stmt_end_line(stmt))
        self.advance()  # DEDENT
        if not body:
            raise TrkSyntaxError("empty block", colon.line, colon.column)
        return body, end_line

    # --- statements ---

    def parse_statement(self) -> ast.Stmt:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "if":
                return self.parse_if()
            if tok.value == "while":
                return self.parse_while()
            if tok.value == "for":
                return self.parse_for()
            if tok.value == "return":
                self.advance()
                value = None
                if not self.check("NEWLINE"):
                    value = self.parse_expr()
                self.end_statement()
                return ast.Return(line=tok.line, value=value)
            if tok.value == "global":
                self.advance()
                names = [self.expect("NAME").value]
                while self.match("OP", ","):
                    names.append(self.expect("NAME").value)
                self.end_statement()
                return ast.GlobalDecl(line=tok.line, names=names)
            if tok.value == "def":
                raise TrkSyntaxError("nested function definitions are not allowed",
                                     tok.line, tok.column)
        expr = self.parse_expr()
        if self.match("OP", "="):
            if not isinstance(expr, (ast.Name, ast.Index, ast.Attr)):
                raise TrkSyntaxError("invalid assignment target", tok.line, tok.column)
            value = self.parse_expr()
            self.end_statement()
            return ast.Assign(line=tok.line, target=expr, value=value)
        self.end_statement()
        return ast.ExprStmt(line=tok.line, expr=expr)

    def parse_if(self) -> ast.If:
        tok = self.expect("KEYWORD", "if")
        cond = self.parse_expr()
        then_body, _ = self.parse_block()
        else_body: list[ast.Stmt] = []
        else_line = None
        if self.check("KEYWORD", "else"):
            else_tok = self.advance()
            else_line = else_tok.line
            else_body, _ = self.parse_block()
        return ast.If(line=tok.line, cond=cond, then_body=then_body,
                      else_body=else_body, else_line=else_line)

    def parse_while(self) -> ast.While:
        tok = self.expect("KEYWORD", "while")
        cond = self.parse_expr()
        body, _ = self.parse_block()
        return ast.While(line=tok.line, cond=cond, body=body)

    def parse_for(self) -> ast.ForIn:
        tok = self.expect("KEYWORD", "for")
        var = self.expect("NAME").value
        self.expect("KEYWORD", "in")
        iterable = self.parse_expr()
        body, _ = self.parse_block()
        return ast.ForIn(line=tok.line, var=var, iterable=iterable, body=body)

    # --- expressions, by precedence ---

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.check("KEYWORD", "or"):
            op = self.advance()
            right = self.parse_and()
            left = ast.BinOp(line=op.line, op="or", left=left, right=right)
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_not()
        while self.check("KEYWORD", "and"):
            op = self.advance()
            right = self.parse_not()
            left = ast.BinOp(line=op.line, op="and", left=left, right=right)
        return left

    def parse_not(self) -> ast.Expr:
        if self.check("KEYWORD", "not"):
            op = self.advance()
            operand = self.parse_not()
            return ast.UnaryOp(line=op.line, op="not", operand=operand)
        return self.parse_comparison()

    def parse_comparison(self) -> ast.Expr:
        left = self.parse_additive()
        while self.peek().kind == "OP" and self.peek().value in ("==", "!=", "<", "<=", ">", ">="):
            op = self.advance()
            right = self.parse_additive()
            left = ast.BinOp(line=op.line, op=op.value, left=left, right=right)
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.peek().kind == "OP" and self.peek().value in ("+", "-"):
            op = self.advance()
            right = self.parse_multiplicative()
            left = ast.BinOp(line=op.line, op=op.value, left=left, right=right)
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.peek().kind == "OP" and self.peek().value in ("*", "/", "//", "%"):
            op = self.advance()
            right = self.parse_unary()
            left = ast.BinOp(line=op.line, op=op.value, left=left, right=right)
        return left

    def parse_unary(self) -> ast.Expr:
        if self.check("OP", "-"):
            op = self.advance()
            operand = self.parse_unary()
            return ast.UnaryOp(line=op.line, op="-", operand=operand)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while True:
            if self.check("OP", "["):
                tok = self.advance()
                index = self.parse_expr()
                self.expect("OP", "]")
                expr = ast.Index(line=tok.line, base=expr, index=index)
            elif self.check("OP", "."):
                tok = self.advance()
                name = self.expect("NAME")
                expr = ast.Attr(line=tok.line, base=expr, name=name.value)
            else:
                return expr

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.advance()
            return ast.IntLit(line=tok.line, value=int(tok.value))
        if tok.kind == "FLOAT":
            self.advance()
            return ast.FloatLit(line=tok.line, value=float(tok.value))
        if tok.kind == "STRING":
            self.advance()
            return ast.StrLit(line=tok.line, value=tok.value)
        if tok.kind == "KEYWORD" and tok.value in ("true", "false"):
            self.advance()
            return ast.BoolLit(line=tok.line, value=tok.value == "true")
        if tok.kind == "KEYWORD" and tok.value == "nil":
            self.advance()
            return ast.NilLit(line=tok.line)
        if tok.kind == "NAME":
            self.advance()
            if self.check("OP", "("):
                self.advance()
                args: list[ast.Expr] = []
                while not self.check("OP", ")"):
                    args.append(self.parse_expr())
                    if not self.match("OP", ","):
                        break
                self.expect("OP", ")")
                return ast.Call(line=tok.line, func=tok.value, args=args)
            return ast.Name(line=tok.line, ident=tok.value)
        if tok.kind == "OP" and tok.value == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect("OP", ")")
            return inner
        if tok.kind == "OP" and tok.value == "[":
            self.advance()
            items: list[ast.Expr] = []
            while not self.check("OP", "]"):
                items.append(self.parse_expr())
                if not self.match("OP", ","):
                    break
            self.expect("OP", "]")
            return ast.ListLit(line=tok.line, items=items)
        if tok.kind == "OP" and tok.value == "{":
            self.advance()
            pairs: list[tuple[str, ast.Expr]] = []
            while not self.check("OP", "}"):
                key = self.expect("STRING")
                self.expect("OP", ":")
                pairs.append((key.value, self.parse_expr()))
                if not self.match("OP", ","):
                    break
            self.expect("OP", "}")
            return ast.MapLit(line=tok.line, pairs=pairs)
        raise TrkSyntaxError(f"unexpected token {tok.value or tok.kind!r}",
                             tok.line, tok.column)


def _stmt_end_line(stmt: ast.Stmt) -> int:
    if isinstance(stmt, ast.If):
        last = stmt.else_body or stmt.then_body
        return _stmt_end_line(last[-1])
    if isinstance(stmt, (ast.While, ast.ForIn)):
        return _stmt_end_line(stmt.body[-1])
    return stmt.line


def parse(source: str, path: str = "<string>") -> ast.SourceUnit:
    """Parse Trk source into a SourceUnit with line-accurate AST."""
    tokens = tokenize(source)
    return _Parser(tokens, source.split("\n")).parse_unit(path, source)
