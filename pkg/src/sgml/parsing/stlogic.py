"""Structured-text control logic: tokenizer, parser, and PLCopen XML wrapper.

The supported statement subset is assignment and IF/ELSIF/ELSE with
comparison, boolean (AND/OR/NOT) and arithmetic (+ - * /) expressions over
BOOL/INT/REAL variables. Loops, CASE and function blocks are rejected with
an error naming the construct.

Two concrete syntaxes feed the same program type: a PLCopen XML project
whose body wraps structured text, and a bare .st file. Remote IO and SCADA
exposure ride on variable annotations:

    bare ST pragma            {read S1/IED1:MMXU1.A}   {write ...}   {scada v_b2}
    PLCopen variable attrs    remote="S1/IED1" path="MMXU1.A" access="read"
                              scada="v_b2"

Statements are plain nested tuples, e.g. ("assign", "x", ("bin", "+", ...)),
so structural equality is free.
"""

from __future__ import annotations

import re

from sgml.model import (
    IoBinding,
    IoDirection,
    PlcSpec,
    ScadaExposure,
    StDataType,
    StLogicProgram,
    StVariable,
)
from sgml.parsing.source import (
    DiagnosticSink,
    FileKind,
    SourceFile,
    local_name,
    parse_xml,
)

_KEYWORDS = {
    "PROGRAM", "END_PROGRAM", "VAR", "END_VAR",
    "IF", "THEN", "ELSIF", "ELSE", "END_IF",
    "AND", "OR", "NOT", "TRUE", "FALSE",
    "BOOL", "INT", "REAL",
}

#: Constructs outside the subset; seeing one is an error naming it.
_UNSUPPORTED = {
    "WHILE", "END_WHILE", "FOR", "END_FOR", "REPEAT", "END_REPEAT",
    "CASE", "END_CASE", "EXIT", "RETURN", "FUNCTION", "FUNCTION_BLOCK",
}

_TOKEN_RE = re.compile(r"""
    (?P<comment>\(\*.*?\*\))
  | (?P<pragma>\{[^}]*\})
  | (?P<number>\d+\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|<=|>=|<>|[=<>+\-*/();:,])
  | (?P<ws>\s+)
  | (?P<bad>.)
""", re.VERBOSE | re.DOTALL)


class StSyntaxError(Exception):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{line}:{column}: {message}")


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind: str, text: str, line: int, column: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column

    def __repr__(self):
        return f"Token({self.kind},{self.text!r})"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    line_start = 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        raw = m.group()
        col = m.start() - line_start + 1
        if kind in ("ws", "comment"):
            pass
        elif kind == "bad":
            raise StSyntaxError(line, col, f"unexpected character {raw!r}")
        elif kind == "ident":
            upper = raw.upper()
            if upper in _UNSUPPORTED:
                raise StSyntaxError(line, col, f"unsupported construct {upper}")
            if upper in _KEYWORDS:
                tokens.append(_Token("kw", upper, line, col))
            else:
                tokens.append(_Token("ident", raw, line, col))
        else:
            tokens.append(_Token(kind, raw, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + raw.rfind("\n") + 1
    tokens.append(_Token("eof", "", line, 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> StSyntaxError:
        tok = self.peek()
        return StSyntaxError(tok.line, tok.column, message)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise self.fail(f"expected {want!r}, found {tok.text or tok.kind!r}")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    # -- expressions --------------------------------------------------

    def expression(self):
        return self._or()

    def _or(self):
        node = self._and()
        while self.accept("kw", "OR"):
            node = ("bin", "OR", node, self._and())
        return node

    def _and(self):
        node = self._not()
        while self.accept("kw", "AND"):
            node = ("bin", "AND", node, self._not())
        return node

    def _not(self):
        if self.accept("kw", "NOT"):
            return ("not", self._not())
        return self._comparison()

    def _comparison(self):
        node = self._sum()
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("=", "<>", "<", "<=", ">", ">="):
            op = self.next().text
            node = ("bin", op, node, self._sum())
        return node

    def _sum(self):
        node = self._term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ("+", "-"):
                op = self.next().text
                node = ("bin", op, node, self._term())
            else:
                return node

    def _term(self):
        node = self._factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ("*", "/"):
                op = self.next().text
                node = ("bin", op, node, self._factor())
            else:
                return node

    def _factor(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.next()
            return ("neg", self._factor())
        if tok.kind == "op" and tok.text == "(":
            self.next()
            node = self.expression()
            self.expect("op", ")")
            return node
        if tok.kind == "number":
            self.next()
            if "." in tok.text:
                return ("num", float(tok.text))
            return ("num", int(tok.text))
        if tok.kind == "kw" and tok.text in ("TRUE", "FALSE"):
            self.next()
            return ("bool", tok.text == "TRUE")
        if tok.kind == "ident":
            self.next()
            if self.peek().kind == "op" and self.peek().text == "(":
                raise StSyntaxError(tok.line, tok.column,
                                    f"unsupported construct function call {tok.text!r}")
            return ("var", tok.text)
        raise self.fail("expected an expression")

    # -- statements ---------------------------------------------------

    def statements(self, stop_keywords: set[str]) -> tuple:
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "eof" or (tok.kind == "kw" and tok.text in stop_keywords):
                return tuple(out)
            out.append(self.statement())

    def statement(self):
        tok = self.peek()
        if tok.kind == "kw" and tok.text == "IF":
            return self._if_statement()
        if tok.kind == "ident":
            name = self.next().text
            self.expect("op", ":=")
            expr = self.expression()
            self.expect("op", ";")
            return ("assign", name, expr)
        raise self.fail(f"expected a statement, found {tok.text or tok.kind!r}")

    def _if_statement(self):
        self.expect("kw", "IF")
        branches = []
        cond = self.expression()
        self.expect("kw", "THEN")
        body = self.statements({"ELSIF", "ELSE", "END_IF"})
        branches.append((cond, body))
        while self.accept("kw", "ELSIF"):
            cond = self.expression()
            self.expect("kw", "THEN")
            branches.append((cond, self.statements({"ELSIF", "ELSE", "END_IF"})))
        else_body: tuple = ()
        if self.accept("kw", "ELSE"):
            else_body = self.statements({"END_IF"})
        self.expect("kw", "END_IF")
        self.accept("op", ";")
        return ("if", tuple(branches), else_body)


_PRAGMA_RE = re.compile(
    r"^\{\s*(?:(?P<dir>read|write)\s+(?P<host>[^:\s]+)\s*:\s*(?P<path>\S+)"
    r"|scada\s+(?P<point>\S+))\s*\}$")


def _parse_declarations(parser: _Parser, sink: DiagnosticSink):
    variables: list[StVariable] = []
    annotations: list[tuple[str, dict]] = []
    while parser.accept("kw", "VAR"):
        while not parser.accept("kw", "END_VAR"):
            name_tok = parser.expect("ident")
            parser.expect("op", ":")
            type_tok = parser.peek()
            if type_tok.kind != "kw" or type_tok.text not in ("BOOL", "INT", "REAL"):
                raise parser.fail(f"unknown type {type_tok.text!r}")
            parser.next()
            data_type = StDataType(type_tok.text)
            initial = None
            if parser.accept("op", ":="):
                expr = parser.expression()
                initial = _literal_value(expr, data_type)
                if initial is None:
                    raise StSyntaxError(name_tok.line, name_tok.column,
                                        f"initializer for {name_tok.text!r} must be a literal")
            parser.expect("op", ";")
            while True:
                pragma = parser.accept("pragma")
                if pragma is None:
                    break
                m = _PRAGMA_RE.match(pragma.text.strip())
                if m is None:
                    sink.error(pragma.line, pragma.column, f"malformed pragma {pragma.text!r}")
                else:
                    annotations.append((name_tok.text, m.groupdict()))
            variables.append(StVariable(name_tok.text, data_type, initial))
    return variables, annotations


def _literal_value(expr, data_type: StDataType):
    neg = False
    if expr[0] == "neg":
        neg, expr = True, expr[1]
    if expr[0] == "bool" and data_type == StDataType.BOOL and not neg:
        return expr[1]
    if expr[0] == "num" and data_type in (StDataType.INT, StDataType.REAL):
        value = -expr[1] if neg else expr[1]
        return float(value) if data_type == StDataType.REAL else int(value)
    return None


def _build_spec(name: str, variables, annotations, statements, sink: DiagnosticSink) -> PlcSpec:
    declared = {v.name for v in variables}
    io_map: list[IoBinding] = []
    scada_points: list[ScadaExposure] = []
    for var_name, ann in annotations:
        if var_name not in declared:
            sink.error(1, 1, f"annotation on undeclared variable {var_name!r}")
            continue
        if ann.get("point"):
            scada_points.append(ScadaExposure(var_name, ann["point"]))
        else:
            io_map.append(IoBinding(var_name, ann["host"], ann["path"],
                                    IoDirection(ann["dir"])))
    program = StLogicProgram(name=name, variables=tuple(variables), statements=statements)
    return PlcSpec(name=name, program=program, io_map=tuple(io_map),
                   scada_points=tuple(scada_points))


def parse_st_text(text: str, path: str = "<st>") -> tuple[PlcSpec, list]:
    """Parse a bare structured-text program file."""
    sink = DiagnosticSink(path)
    try:
        parser = _Parser(_tokenize(text))
        parser.expect("kw", "PROGRAM")
        name = parser.expect("ident").text
        variables, annotations = _parse_declarations(parser, sink)
        statements = parser.statements({"END_PROGRAM"})
        parser.expect("kw", "END_PROGRAM")
    except StSyntaxError as exc:
        sink.error(exc.line, exc.column, exc.message)
        sink.raise_if_errors()
    sink.raise_if_errors()
    return _build_spec(name, variables, annotations, statements, sink), sink.items


def _parse_plcopen(file: SourceFile) -> tuple[PlcSpec, list]:
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    pou = None
    for elem in doc.root.iter():
        if local_name(elem.tag) == "pou":
            pou = elem
            break
    if pou is None:
        sink.error(1, 1, "PLCopen project has no pou element")
        sink.raise_if_errors()
    name = pou.get("name", "")

    variables: list[StVariable] = []
    annotations: list[tuple[str, dict]] = []
    for var in doc.iter_named("variable"):
        var_name = var.get("name", "")
        type_elem = doc.find(var, "type")
        data_type = None
        if type_elem is not None:
            for child in type_elem:
                try:
                    data_type = StDataType(local_name(child.tag))
                except ValueError:
                    sink.error_at(doc, child, f"unknown type {local_name(child.tag)!r}")
        if data_type is None:
            sink.error_at(doc, var, f"variable {var_name!r} has no recognized type")
            continue
        initial = None
        init_elem = doc.find(var, "initialValue")
        if init_elem is not None:
            simple = doc.find(init_elem, "simpleValue")
            raw = simple.get("value", "") if simple is not None else ""
            if data_type == StDataType.BOOL:
                initial = raw.upper() == "TRUE"
            elif data_type == StDataType.INT:
                initial = int(raw)
            else:
                initial = float(raw)
        variables.append(StVariable(var_name, data_type, initial))
        if var.get("remote"):
            annotations.append((var_name, {
                "dir": var.get("access", "read"), "host": var.get("remote"),
                "path": var.get("path", ""), "point": None}))
        if var.get("scada"):
            annotations.append((var_name, {"point": var.get("scada")}))

    body_text = ""
    for elem in doc.root.iter():
        if local_name(elem.tag) == "ST":
            body_text = elem.text or ""
            # tolerate a nested xhtml wrapper
            for child in elem:
                body_text += (child.text or "") + (child.tail or "")
            break

    try:
        parser = _Parser(_tokenize(body_text))
        statements = parser.statements(set())
        parser.expect("eof")
    except StSyntaxError as exc:
        sink.error(exc.line, exc.column, exc.message)
        sink.raise_if_errors()
    sink.raise_if_errors()
    return _build_spec(name, variables, annotations, statements, sink), sink.items


def parse_plc_logic(file: SourceFile) -> tuple[PlcSpec, list]:
    """Parse PLC control logic from PLCopen XML or bare structured text."""
    if file.kind != FileKind.PLC_LOGIC:
        raise ValueError(f"{file.path}: expected PLC logic, found {file.kind.value}")
    if file.data.lstrip().startswith(b"<"):
        return _parse_plcopen(file)
    return parse_st_text(file.text, file.path)
