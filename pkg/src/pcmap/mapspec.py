"""Reading and writing the map-spec text format.

Example (the map ``f1``)::

    backend = exact
    partition = [1/2]
    side = right
    branch {
      kind = affine
      slope = 1/2
      intercept = 1/8
    }
    branch {
      kind = affine
      slope = 1/2
      intercept = 3/8
    }

``partition`` lists interior breakpoints only.  ``side`` lines are optional;
when present there must be one per interior breakpoint, in order.  Polynomial
branches use ``coeffs = [c0, c1, ...]`` (ascending powers) and expression
branches ``expr = "..."``.  ``#`` starts a comment; a statement may end
with ``;``.
"""
from __future__ import annotations

import re

from .core import AffineBranch, ExprBranch, PiecewiseMap, PolyBranch, validate_map
from .errors import MapSpecSyntaxError, MapValidationError
from .expr import parse_expr, to_text
from .scalar import EXACT, check_backend, format_scalar, parse_number

_TOKENS = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?:\s*/\s*\d+)?)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[=\[\]{},;])
""", re.VERBOSE)


def _tokenize(text: str):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKENS.match(text, pos)
        if m is None:
            raise MapSpecSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(("newline", "\n", line, pos - line_start + 1))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append((kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Reader:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok):
        raise MapSpecSyntaxError(msg, tok[2], tok[3])

    def skip_newlines(self):
        while self.peek()[0] == "newline":
            self.i += 1

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            self.fail(f"expected {value!r}, found {tok[1] or tok[0]!r}", tok)
        return tok

    def end_statement(self):
        tok = self.peek()
        if tok[1] == ";":
            self.take()
            tok = self.peek()
        if tok[0] == "newline":
            self.take()
        elif tok[0] != "eof" and tok[1] != "}":
            self.fail(f"expected end of line, found {tok[1]!r}", tok)

    def value(self):
        tok = self.take()
        kind = tok[0]
        if kind in ("number", "ident"):
            return tok
        if kind == "string":
            return ("string", tok[1][1:-1], tok[2], tok[3] + 1)
        if tok[1] == "[":
            items = []
            if self.peek()[1] == "]":
                self.take()
                return ("list", items, tok[2], tok[3])
            while True:
                item = self.take()
                if item[0] != "number":
                    self.fail(f"expected a number, found {item[1] or item[0]!r}", item)
                items.append(item)
                sep = self.take()
                if sep[1] == "]":
                    return ("list", items, tok[2], tok[3])
                if sep[1] != ",":
                    self.fail(f"expected ',' or ']', found {sep[1] or sep[0]!r}", sep)
        self.fail(f"expected a value, found {tok[1] if tok[0] != 'newline' else 'end of line'!r}", tok)

    def statement(self):
        key = self.take()
        if key[0] != "ident":
            self.fail(f"expected a key, found {key[1] or key[0]!r}", key)
        self.expect("=")
        val = self.value()
        self.end_statement()
        return key, val


def _number(tok, backend):
    if tok[0] != "number":
        raise MapSpecSyntaxError(f"expected a number, found {tok[1]!r}", tok[2], tok[3])
    try:
        return parse_number(tok[1].replace(" ", ""), backend)
    except ValueError as exc:
        raise MapSpecSyntaxError(str(exc), tok[2], tok[3]) from None


def _branch(fields, backend, open_tok):
    def need(name):
        if name not in fields:
            raise MapSpecSyntaxError(f"branch is missing {name!r}", open_tok[2], open_tok[3])
        return fields[name]

    kind_tok = need("kind")
    kind = kind_tok[1]
    allowed = {"affine": {"kind", "slope", "intercept"}, "poly": {"kind", "coeffs"}, "expr": {"kind", "expr"}}
    if kind not in allowed:
        raise MapSpecSyntaxError(f"unknown branch kind {kind!r}", kind_tok[2], kind_tok[3])
    for name, tok in fields.items():
        if name not in allowed[kind]:
            raise MapSpecSyntaxError(f"field {name!r} not allowed for kind {kind}", tok[2], tok[3])
    if kind == "affine":
        return AffineBranch(_number(need("slope"), backend), _number(need("intercept"), backend))
    if kind == "poly":
        tok = need("coeffs")
        if tok[0] != "list" or not tok[1]:
            raise MapSpecSyntaxError("coeffs must be a non-empty list", tok[2], tok[3])
        return PolyBranch(tuple(_number(t, backend) for t in tok[1]))
    tok = need("expr")
    if tok[0] != "string":
        raise MapSpecSyntaxError("expr must be a quoted string", tok[2], tok[3])
    return ExprBranch(parse_expr(tok[1], tok[2], tok[3]))


def parse_map_spec(text: str, validate: bool = True) -> PiecewiseMap:
    """Parse map-spec text.

    Raises :class:`MapSpecSyntaxError` with a line/column on malformed input
    and, when ``validate`` is set, :class:`MapValidationError` for maps that
    parse but violate the standing assumptions.
    """
    reader = _Reader(text)
    top = {}
    sides = []
    branch_blocks = []
    while True:
        reader.skip_newlines()
        tok = reader.peek()
        if tok[0] == "eof":
            break
        if tok == ("ident", "branch", tok[2], tok[3]) and reader.tokens[reader.i + 1][1] == "{":
            reader.take()
            open_tok = reader.take()
            fields = {}
            while True:
                reader.skip_newlines()
                if reader.peek()[1] == "}":
                    reader.take()
                    reader.end_statement()
                    break
                if reader.peek()[0] == "eof":
                    reader.fail("unterminated branch block", open_tok)
                key, val = reader.statement()
                if key[1] in fields:
                    reader.fail(f"duplicate field {key[1]!r}", key)
                fields[key[1]] = val
            branch_blocks.append((fields, open_tok))
            continue
        key, val = reader.statement()
        name = key[1]
        if name == "side":
            if val[0] != "ident" or val[1].lower() not in ("left", "right"):
                reader.fail("side must be left or right", val)
            sides.append(val[1].lower())
        elif name in ("backend", "partition"):
            if name in top:
                reader.fail(f"duplicate key {name!r}", key)
            top[name] = val
        else:
            reader.fail(f"unknown key {name!r}", key)
    if "backend" not in top:
        raise MapSpecSyntaxError("missing 'backend = exact|float' line", 1, 1)
    backend = top["backend"][1]
    try:
        check_backend(backend)
    except ValueError as exc:
        reader.fail(str(exc), top["backend"])
    part_tok = top.get("partition", ("list", [], 1, 1))
    if part_tok[0] != "list":
        reader.fail("partition must be a list", part_tok)
    interior = [_number(t, backend) for t in part_tok[1]]
    branches = [_branch(fields, backend, open_tok) for fields, open_tok in branch_blocks]
    if sides and len(sides) != len(interior):
        raise MapSpecSyntaxError(
            f"{len(sides)} side lines given for {len(interior)} interior breakpoints", 1, 1)
    m = PiecewiseMap.from_interior(interior, branches, sides or None, backend)
    if validate:
        report = validate_map(m)
        if not report.ok:
            raise MapValidationError(report)
    return m


def serialize_map(m: PiecewiseMap) -> str:
    """Deterministic map-spec text; ``parse_map_spec`` inverts it."""
    lines = [f"backend = {m.backend}",
             "partition = [" + ", ".join(format_scalar(v) for v in m.interior) + "]"]
    lines += [f"side = {s}" for s in m.sides]
    for br in m.branches:
        lines.append("branch {")
        lines.append(f"  kind = {br.kind}")
        if br.kind == "affine":
            lines.append(f"  slope = {format_scalar(br.slope)}")
            lines.append(f"  intercept = {format_scalar(br.intercept)}")
        elif br.kind == "poly":
            lines.append("  coeffs = [" + ", ".join(format_scalar(c) for c in br.coeffs) + "]")
        else:
            lines.append(f'  expr = "{to_text(br.tree)}"')
        lines.append("}")
    return "\n".join(lines) + "\n"


def load_map(path, validate: bool = True) -> PiecewiseMap:
    with open(path, encoding="utf-8") as fh:
        return parse_map_spec(fh.read(), validate=validate)


__all__ = ["parse_map_spec", "serialize_map", "load_map", "EXACT"]
