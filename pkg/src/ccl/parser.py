"""Recursive-descent parser and renderer for the CCL architecture language.

Grammar summary::

    model      := enumdecl* componentdecl+
    enumdecl   := "enum" IDENT "{" IDENT ("," IDENT)* "}"
    component  := ["root"] "component" IDENT ["(" param ("," param)* ")"]
                  "{" portdecl* (automaton | composite) "}"
    portdecl   := ("in" | "out") ["delayed" "init" literal] type IDENT ";"
    automaton  := "automaton" "{" vardecl* "initial" IDENT ";" transition* "}"
    transition := IDENT ":" IDENT "->" IDENT "[" expr "]" ["/" "{" stmt* "}"] ";"
    stmt       := IDENT "=" expr ";" | IDENT "!" expr ";"
    composite  := "subcomponents" "{" (IDENT ":" IDENT ["(" args ")"] ";")* "}"
                  "connectors" "{" (endpoint "->" endpoint ";")* "}"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .errors import ParseError
from .expr import (
    Add,
    And,
    Cmp,
    Const,
    Expr,
    Mul,
    Neg,
    Not,
    Or,
    SourceSpan,
    Sub,
    Var,
    to_text,
)
from .ir import (
    Automaton,
    Component,
    Composite,
    Connector,
    Diagnostic,
    Endpoint,
    EnumDecl,
    Model,
    Port,
    SubInstance,
    Transition,
    VarDecl,
)
from .values import BOOL, INT, RAT, STR, EnumVal, TypeTag, check_int, enum_type, format_value

KEYWORDS = {
    "enum", "root", "component", "in", "out", "delayed", "init", "automaton", "var",
    "initial", "subcomponents", "connectors", "int", "rat", "bool", "string", "true", "false",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*(?:[^*]|\*(?!/))*\*/)
  | (?P<rat>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|::|==|!=|<=|>=|&&|\|\||[{}()\[\];:,.!=<>+\-*/])
    """,
    re.VERBOSE,
)

_MAX_DEPTH = 200


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | rat | string | op | eof
    text: str
    value: object
    span: SourceSpan


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(body):
            raise ValueError("dangling escape")
        nxt = body[i + 1]
        simple = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}
        if nxt in simple:
            out.append(simple[nxt])
            i += 2
        elif nxt == "u":
            hexd = body[i + 2 : i + 6]
            if len(hexd) != 4 or not all(c in "0123456789abcdefABCDEF" for c in hexd):
                raise ValueError("bad \\u escape")
            out.append(chr(int(hexd, 16)))
            i += 6
        else:
            raise ValueError(f"unknown escape \\{nxt}")
    return "".join(out)


def tokenize(text: str, file: str = "<input>") -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    line, col = 1, 1
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError([Diagnostic("SYNTAX", f"unexpected character {text[pos]!r}", SourceSpan(file, line, col, 1))])
        kind = m.lastgroup
        lexeme = m.group()
        span = SourceSpan(file, line, col, len(lexeme))
        if kind == "int":
            tokens.append(Token("int", lexeme, int(lexeme), span))
        elif kind == "rat":
            tokens.append(Token("rat", lexeme, Fraction(lexeme), span))
        elif kind == "string":
            try:
                value = _unescape(lexeme[1:-1])
            except ValueError as exc:
                raise ParseError([Diagnostic("SYNTAX", f"bad string literal: {exc}", span)]) from None
            tokens.append(Token("string", lexeme, value, span))
        elif kind in ("ident", "op"):
            tokens.append(Token(kind, lexeme, lexeme, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", None, SourceSpan(file, line, col, 0)))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0
        self.depth = 0
        self.enum_names: set = set()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError([Diagnostic("SYNTAX", f"{msg} (found {found!r})", tok.span)])

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.fail(f"expected {text!r}")
        return t

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected {what}")
        self.i += 1
        return t

    # declarations
    def model(self, file: str) -> Model:
        enums: List[EnumDecl] = []
        comps: List[Component] = []
        roots: List[Token] = []
        while self.at("enum"):
            enums.append(self.enum_decl())
        self.enum_names = {e.name for e in enums}
        while self.tok.kind != "eof":
            start = self.tok
            is_root = self.accept("root") is not None
            if not self.at("component"):
                self.fail("expected 'component'")
            comp = self.component()
            if is_root:
                roots.append(start)
                root_name = comp.name
            comps.append(comp)
        diags: List[Diagnostic] = []
        if not comps:
            diags.append(Diagnostic("MISSING_ROOT", "model declares no components", self.tok.span))
        elif not roots:
            diags.append(Diagnostic("MISSING_ROOT", "no component is marked 'root'", comps[0].span))
        elif len(roots) > 1:
            diags.append(Diagnostic("DUPLICATE_ROOT", "more than one component is marked 'root'", roots[1].span))
        seen = {}
        for c in comps:
            if c.name in seen:
                diags.append(Diagnostic("DUPLICATE_NAME", f"component {c.name} declared twice", c.span))
            seen[c.name] = c
        seen_enums = set()
        for e in enums:
            if e.name in seen_enums or e.name in seen:
                diags.append(Diagnostic("DUPLICATE_NAME", f"enum {e.name} declared twice", e.span))
            seen_enums.add(e.name)
        for c in comps:
            if isinstance(c.body, Composite):
                for s in c.body.subs:
                    if s.component not in seen:
                        diags.append(Diagnostic("UNKNOWN_REFERENCE", f"unknown component {s.component}", s.span))
        if diags:
            raise ParseError(diags)
        return Model(tuple(enums), tuple(comps), root_name)

    def enum_decl(self) -> EnumDecl:
        start = self.expect("enum")
        name = self.ident("enum name").text
        self.expect("{")
        variants = [self.ident("variant").text]
        while self.accept(","):
            variants.append(self.ident("variant").text)
        self.expect("}")
        return EnumDecl(name, tuple(variants), start.span)

    def type_tag(self) -> TypeTag:
        t = self.tok
        for kw, tag in (("int", INT), ("rat", RAT), ("bool", BOOL), ("string", STR)):
            if self.accept(kw):
                return tag
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return enum_type(t.text)
        self.fail("expected a type")

    def component(self) -> Component:
        start = self.expect("component")
        name = self.ident("component name").text
        params: List[Tuple[str, TypeTag]] = []
        if self.accept("("):
            if not self.at(")"):
                params.append(self.param())
                while self.accept(","):
                    params.append(self.param())
            self.expect(")")
        self.expect("{")
        ports: List[Port] = []
        while self.at("in") or self.at("out"):
            ports.append(self.port())
        if self.at("automaton"):
            body: Union[Automaton, Composite] = self.automaton()
        elif self.at("subcomponents"):
            body = self.composite()
        else:
            self.fail("expected 'automaton' or 'subcomponents'")
        self.expect("}")
        return Component(name, tuple(params), tuple(ports), body, start.span)

    def param(self) -> Tuple[str, TypeTag]:
        name = self.ident("parameter name").text
        self.expect(":")
        return name, self.type_tag()

    def port(self) -> Port:
        start = self.tok
        direction = self.tok.text
        self.i += 1
        delayed = False
        initial = None
        if self.accept("delayed"):
            delayed = True
            self.expect("init")
            initial = self.literal().value
        ty = self.type_tag()
        name = self.ident("port name").text
        self.expect(";")
        if ty == RAT and isinstance(initial, int) and not isinstance(initial, bool):
            initial = Fraction(initial)
        return Port(name, direction, ty, delayed, initial, start.span)

    def literal(self) -> Const:
        t = self.tok
        neg = False
        if self.at("-"):
            neg = True
            self.i += 1
            t = self.tok
        if t.kind == "int":
            self.i += 1
            v = -t.value if neg else t.value
            return Const(self._check_int(v, t), INT, span=t.span)
        if t.kind == "rat":
            self.i += 1
            return Const(-t.value if neg else t.value, RAT, span=t.span)
        if neg:
            self.fail("expected a number after '-'")
        if t.kind == "string":
            self.i += 1
            return Const(t.value, STR, span=t.span)
        if self.accept("true"):
            return Const(True, BOOL, span=t.span)
        if self.accept("false"):
            return Const(False, BOOL, span=t.span)
        if t.kind == "ident" and t.text not in KEYWORDS and self.toks[self.i + 1].text == "::":
            self.i += 2
            variant = self.ident("enum variant")
            return Const(EnumVal(t.text, variant.text), enum_type(t.text), span=t.span)
        self.fail("expected a literal")

    def _check_int(self, v: int, t: Token) -> int:
        try:
            return check_int(v)
        except Exception:
            self.fail("integer literal out of 64-bit range", t)

    def automaton(self) -> Automaton:
        self.expect("automaton")
        self.expect("{")
        vars_: List[VarDecl] = []
        while self.at("var"):
            start = self.expect("var")
            ty = self.type_tag()
            name = self.ident("variable name").text
            self.expect("=")
            lit = self.literal()
            if ty == RAT and lit.ty == INT:
                lit = Const(Fraction(lit.value), RAT, span=lit.span)
            self.expect(";")
            vars_.append(VarDecl(name, ty, lit, start.span))
        self.expect("initial")
        initial = self.ident("state name").text
        self.expect(";")
        transitions: List[Transition] = []
        while not self.at("}"):
            transitions.append(self.transition())
        self.expect("}")
        return Automaton(initial, tuple(vars_), tuple(transitions))

    def transition(self) -> Transition:
        start = self.ident("transition id")
        self.expect(":")
        src = self.ident("state name").text
        self.expect("->")
        dst = self.ident("state name").text
        self.expect("[")
        guard = self.expr()
        self.expect("]")
        actions: List[Tuple[str, Expr]] = []
        emissions: List[Tuple[str, Expr]] = []
        if self.accept("/"):
            self.expect("{")
            while not self.at("}"):
                target = self.ident("variable or port name").text
                if self.accept("="):
                    actions.append((target, self.expr()))
                elif self.accept("!"):
                    emissions.append((target, self.expr()))
                else:
                    self.fail("expected '=' or '!'")
                self.expect(";")
            self.expect("}")
        self.expect(";")
        return Transition(start.text, src, dst, guard, tuple(actions), tuple(emissions), start.span)

    def composite(self) -> Composite:
        self.expect("subcomponents")
        self.expect("{")
        subs: List[SubInstance] = []
        while not self.at("}"):
            start = self.ident("instance name")
            self.expect(":")
            comp = self.ident("component name").text
            args: List[Expr] = []
            if self.accept("("):
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
            self.expect(";")
            subs.append(SubInstance(start.text, comp, tuple(args), start.span))
        self.expect("}")
        self.expect("connectors")
        self.expect("{")
        conns: List[Connector] = []
        while not self.at("}"):
            start = self.tok
            a = self.endpoint()
            self.expect("->")
            b = self.endpoint()
            self.expect(";")
            conns.append(Connector(a, b, start.span))
        self.expect("}")
        return Composite(tuple(subs), tuple(conns))

    def endpoint(self) -> Endpoint:
        first = self.ident("instance or port name").text
        if self.accept("."):
            return Endpoint(first, self.ident("port name").text)
        return Endpoint(None, first)

    # expressions, lowest precedence first
    def expr(self) -> Expr:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            self.fail("expression nested too deeply")
        try:
            return self.or_expr()
        finally:
            self.depth -= 1

    def or_expr(self) -> Expr:
        start = self.tok
        items = [self.and_expr()]
        while self.accept("||"):
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items), span=start.span)

    def and_expr(self) -> Expr:
        start = self.tok
        items = [self.not_expr()]
        while self.accept("&&"):
            items.append(self.not_expr())
        return items[0] if len(items) == 1 else And(tuple(items), span=start.span)

    def not_expr(self) -> Expr:
        start = self.accept("!")
        if start:
            self.depth += 1
            if self.depth > _MAX_DEPTH:
                self.fail("expression nested too deeply")
            try:
                return Not(self.not_expr(), span=start.span)
            finally:
                self.depth -= 1
        return self.cmp_expr()

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        for op in ("<=", ">=", "==", "!=", "<", ">"):
            t = self.accept(op)
            if t:
                return Cmp(op, left, self.add_expr(), span=t.span)
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while True:
            t = self.accept("+")
            if t:
                left = Add(left, self.mul_expr(), span=t.span)
                continue
            t = self.accept("-")
            if t:
                left = Sub(left, self.mul_expr(), span=t.span)
                continue
            return left

    def mul_expr(self) -> Expr:
        left = self.neg_expr()
        while True:
            t = self.accept("*")
            if not t:
                return left
            left = Mul(left, self.neg_expr(), span=t.span)

    def neg_expr(self) -> Expr:
        t = self.accept("-")
        if t:
            nxt = self.tok
            if nxt.kind == "int":
                self.i += 1
                return Const(self._check_int(-nxt.value, nxt), INT, span=t.span)
            if nxt.kind == "rat":
                self.i += 1
                return Const(-nxt.value, RAT, span=t.span)
            self.depth += 1
            if self.depth > _MAX_DEPTH:
                self.fail("expression nested too deeply")
            try:
                return Neg(self.neg_expr(), span=t.span)
            finally:
                self.depth -= 1
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind in ("int", "rat", "string") or self.at("true") or self.at("false"):
            return self.literal()
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.toks[self.i + 1].text == "::":
                return self.literal()
            self.i += 1
            return Var(t.text, span=t.span)
        self.fail("expected an expression")


def parse_model(text: Union[str, bytes], file: str = "<input>") -> Model:
    """Parse CCL source; raises :class:`ParseError` with positioned diagnostics."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError([Diagnostic("ENCODING", f"input is not UTF-8: {exc.reason}", SourceSpan(file, 1, 1, 0))]) from None
    tokens = tokenize(text, file)
    return _Parser(tokens).model(file)


def parse_expr(text: str) -> Expr:
    p = _Parser(tokenize(text))
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return e


def parse_file(path) -> Model:
    with open(path, "rb") as fh:
        return parse_model(fh.read(), str(path))


# -- rendering -----------------------------------------------------------------------


def _literal_text(v, ty: TypeTag) -> str:
    return to_text(Const(v, ty))


def render_model(m: Model) -> str:
    out: List[str] = []
    for e in m.enums:
        out.append(f"enum {e.name} {{ {', '.join(e.variants)} }}")
        out.append("")
    for c in m.components:
        out.extend(_render_component(c, c.name == m.root))
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def _render_component(c: Component, is_root: bool) -> List[str]:
    head = ("root " if is_root else "") + f"component {c.name}"
    if c.params:
        head += "(" + ", ".join(f"{n}: {t}" for n, t in c.params) + ")"
    lines = [head + " {"]
    for p in c.ports:
        delayed = f" delayed init {_literal_text(p.initial, p.ty)}" if p.delayed else ""
        lines.append(f"  {p.direction}{delayed} {p.ty} {p.name};")
    if isinstance(c.body, Automaton):
        a = c.body
        lines.append("  automaton {")
        for v in a.vars:
            lines.append(f"    var {v.ty} {v.name} = {to_text(v.initial)};")
        lines.append(f"    initial {a.initial};")
        for t in a.transitions:
            text = f"    {t.id}: {t.source} -> {t.target} [{to_text(t.guard)}]"
            stmts = [f"{n} = {to_text(e)};" for n, e in t.actions]
            stmts += [f"{n}! {to_text(e)};" for n, e in t.emissions]
            if stmts:
                text += " / { " + " ".join(stmts) + " }"
            lines.append(text + ";")
        lines.append("  }")
    else:
        b = c.body
        lines.append("  subcomponents {")
        for s in b.subs:
            args = "(" + ", ".join(to_text(a) for a in s.args) + ")" if s.args else ""
            lines.append(f"    {s.name}: {s.component}{args};")
        lines.append("  }")
        lines.append("  connectors {")
        for conn in b.connectors:
            lines.append(f"    {conn.source} -> {conn.target};")
        lines.append("  }")
    lines.append("}")
    return lines
