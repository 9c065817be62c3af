"""Line-oriented tokenizer for Trk.

Produces a flat token stream with NEWLINE / INDENT / DEDENT tokens, in the
style of off-side-rule languages.  Indentation must be spaces; tabs are
rejected.  Comments start with ``#`` and run to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TrkSyntaxError

KEYWORDS = {
    "def", "if", "else", "while", "for", "in", "return", "global",
    "and", "or", "not", "true", "false", "nil",
}

# longest first so that e.g. "//" wins over "/"
OPERATORS = [
    "==", "!=", "<=", ">=", "//",
    "+", "-", "*", "/", "%", "<", ">", "=",
    "(", ")", "[", "]", "{", "}", ",", ":", ".", "@",
]


@dataclass
class Token:
    kind: str  # NAME KEYWORD INT FLOAT STRING OP NEWLINE INDENT DEDENT EOF
    value: str
    line: int
    column: int


def _lex_string(line_text: str, i: int, line_no: int) -> tuple[str, int]:
    out = []
    i += 1  # opening quote
    while i < len(line_text):
        c = line_text[i]
        if c == '"':
            return "".join(out), i + 1
        if c == "\\":
            if i + 1 >= len(line_text):
                break
            esc = line_text[i + 1]
            mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
            if mapped is None:
                raise TrkSyntaxError(f"unknown escape \\{esc}", line_no, i + 1)
            out.append(mapped)
            i += 2
        else:
            out.append(c)
            i += 1
    raise TrkSyntaxError("unterminated string", line_no, i)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    indent_stack = [0]
    lines = source.split("\n")
    for line_no, raw in enumerate(lines, start=1):
        if "\t" in raw:
            raise TrkSyntaxError("tab characters are not allowed", line_no, raw.index("\t"))
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if indent > indent_stack[-1]:
            indent_stack.append(indent)
            tokens.append(Token("INDENT", "", line_no, 0))
        else:
            while indent < indent_stack[-1]:
                indent_stack.pop()
                tokens.append(Token("DEDENT", "", line_no, 0))
            if indent != indent_stack[-1]:
                raise TrkSyntaxError("inconsistent indentation", line_no, 0)
        i = indent
        while i < len(raw):
            c = raw[i]
            if c == " ":
                i += 1
                continue
            if c == "#":
                break
            col = i
            if c == '"':
                text, i = _lex_string(raw, i, line_no)
                tokens.append(Token("STRING", text, line_no, col))
                continue
            if c.isdigit():
                j = i
                while j < len(raw) and raw[j].isdigit():
                    j += 1
                is_float = False
                if j < len(raw) and raw[j] == "." and j + 1 < len(raw) and raw[j + 1].isdigit():
                    is_float = True
                    j += 1
                    while j < len(raw) and raw[j].isdigit():
                        j += 1
                tokens.append(Token("FLOAT" if is_float else "INT", raw[i:j], line_no, col))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < len(raw) and (raw[j].isalnum() or raw[j] == "_"):
                    j += 1
                word = raw[i:j]
                kind = "KEYWORD" if word in KEYWORDS else "NAME"
                tokens.append(Token(kind, word, line_no, col))
                i = j
                continue
            for op in OPERATORS:
                if raw.startswith(op, i):
                    tokens.append(Token("OP", op, line_no, col))
                    i += len(op)
                    break
            else:
                raise TrkSyntaxError(f"unexpected character {c!r}", line_no, col)
        tokens.append(Token("NEWLINE", "", line_no, len(raw)))
    final_line = len(lines)
    while len(indent_stack) > 1:
        indent_stack.pop()
        tokens.append(Token("DEDENT", "", final_line, 0))
    tokens.append(Token("EOF", "", final_line, 0))
    return tokens
