"""SMT-LIB2 printing, s-expression parsing and the subprocess backend."""

from __future__ import annotations

import re
import shlex
import subprocess
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..errors import SolverError
from ..expr import FALSE, TRUE, Add, And, Cmp, Const, Expr, Mul, Neg, Not, Or, Sub, Sym, sym_vars, walk
from ..symbolic import eval_concrete, simplify
from ..values import BOOL, INT, RAT, STR, EnumVal, TypeTag


def _ident(name: str) -> str:
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        return name
    return "|" + name.replace("|", "_").replace("\\", "_") + "|"


def _int_text(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def _real_text(q: Fraction) -> str:
    q = Fraction(q)
    body = f"{abs(q.numerator)}.0" if q.denominator == 1 else f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    return body if q >= 0 else f"(- {body})"


def _is_real(e: Expr) -> bool:
    for n in walk(e):
        if isinstance(n, Sym) and n.ty == RAT:
            return True
        if isinstance(n, Const) and n.ty == RAT:
            return True
    return False


class SmtPrinter:
    def __init__(self, enums: Dict[str, Tuple[str, ...]]):
        self.enums = enums
        self.strings: Dict[str, str] = {}

    def string_const(self, s: str) -> str:
        if s not in self.strings:
            self.strings[s] = f"strlit_{len(self.strings)}"
        return self.strings[s]

    def term(self, e: Expr, real: bool) -> str:
        if isinstance(e, Const):
            v = e.value
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, (int, Fraction)):
                if real:
                    return _real_text(Fraction(v))
                return _int_text(int(v))
            if isinstance(v, str):
                return self.string_const(v)
            if isinstance(v, EnumVal):
                return f"{v.enum}__{v.variant}"
            raise SolverError("UNSUPPORTED_ATOM", f"cannot print {e!r}")
        if isinstance(e, Sym):
            if real and e.ty == INT:
                return f"(to_real {_ident(e.name)})"
            return _ident(e.name)
        if isinstance(e, Neg):
            return f"(- {self.term(e.arg, real)})"
        if isinstance(e, Add):
            return f"(+ {self.term(e.left, real)} {self.term(e.right, real)})"
        if isinstance(e, Sub):
            return f"(- {self.term(e.left, real)} {self.term(e.right, real)})"
        if isinstance(e, Mul):
            return f"(* {self.term(e.left, real)} {self.term(e.right, real)})"
        if isinstance(e, Not):
            return f"(not {self.term(e.arg, real)})"
        if isinstance(e, And):
            return "(and " + " ".join(self.term(a, False) for a in e.args) + ")" if e.args else "true"
        if isinstance(e, Or):
            return "(or " + " ".join(self.term(a, False) for a in e.args) + ")" if e.args else "false"
        if isinstance(e, Cmp):
            r = _is_real(e)
            l, rr = self.term(e.left, r), self.term(e.right, r)
            if e.op == "==":
                return f"(= {l} {rr})"
            if e.op == "!=":
                return f"(not (= {l} {rr}))"
            return f"({e.op} {l} {rr})"
        raise SolverError("UNSUPPORTED_ATOM", f"cannot print {e!r}")

    def script(self, formulas: List[Expr]) -> Tuple[str, Dict[str, TypeTag]]:
        types: Dict[str, TypeTag] = {}
        for f in formulas:
            types.update(sym_vars(f))
        body = [f"(assert {self.term(simplify(f), False)})" for f in formulas]
        head = ["(set-option :produce-models true)", "(set-logic ALL)"]
        used_enums = sorted({ty.enum for ty in types.values() if ty.kind == "enum"} | {
            n.value.enum for f in formulas for n in walk(f) if isinstance(n, Const) and isinstance(n.value, EnumVal)
        })
        for en in used_enums:
            ctors = " ".join(f"({en}__{v})" for v in self.enums[en])
            head.append(f"(declare-datatypes (({en} 0)) (({ctors})))")
        if self.strings or any(ty == STR for ty in types.values()):
            head.append("(declare-sort Str 0)")
            for s, name in sorted(self.strings.items(), key=lambda kv: kv[1]):
                head.append(f"(declare-const {name} Str)")
            if len(self.strings) > 1:
                head.append("(assert (distinct " + " ".join(sorted(self.strings.values())) + "))")
        sorts = {"int": "Int", "rat": "Real", "bool": "Bool", "string": "Str"}
        for name, ty in sorted(types.items()):
            sort = ty.enum if ty.kind == "enum" else sorts[ty.kind]
            head.append(f"(declare-const {_ident(name)} {sort})")
        names = " ".join(_ident(n) for n in sorted(types))
        tail = ["(check-sat)"]
        if types:
            tail.append(f"(get-value ({names}))")
        tail.append("(exit)")
        return "\n".join(head + body + tail) + "\n", types


# -- s-expressions ------------------------------------------------------------------

_SEXP_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()|"]+))')


def parse_sexps(text: str) -> list:
    out: list = []
    stack: List[list] = []
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise SolverError("BACKEND_PROTOCOL", f"cannot tokenize reply near {text[pos:pos + 20]!r}")
            break
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if not stack:
                raise SolverError("BACKEND_PROTOCOL", "unbalanced ')' in reply")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            atom = m.group(3) or m.group(4) or m.group(5)
            if atom is None:
                break
            (stack[-1] if stack else out).append(atom)
    if stack:
        raise SolverError("BACKEND_PROTOCOL", "unbalanced '(' in reply")
    return out


def _num_value(sx) -> Fraction:
    if isinstance(sx, str):
        try:
            return Fraction(sx)
        except ValueError:
            raise SolverError("BACKEND_PROTOCOL", f"bad numeral {sx!r}") from None
    if isinstance(sx, list) and len(sx) == 2 and sx[0] == "-":
        return -_num_value(sx[1])
    if isinstance(sx, list) and len(sx) == 3 and sx[0] == "/":
        return _num_value(sx[1]) / _num_value(sx[2])
    if isinstance(sx, list) and len(sx) == 2 and sx[0] == "to_real":
        return _num_value(sx[1])
    raise SolverError("BACKEND_PROTOCOL", f"bad numeric value {sx!r}")


def _unident(name: str) -> str:
    return name[1:-1] if name.startswith("|") and name.endswith("|") else name


class ExternalSolver:
    def __init__(self, command: str, enums: Optional[Dict[str, Tuple[str, ...]]] = None):
        self.command = command
        self.enums = dict(enums or {})

    def solve(self, formulas: List[Expr], timeout_s: Optional[float] = None):
        printer = SmtPrinter(self.enums)
        script, types = printer.script(formulas)
        # string literal constants are needed in the value query too
        lit_names = sorted(printer.strings.values())
        if lit_names:
            script = script.replace("(exit)", f"(get-value ({' '.join(lit_names)}))\n(exit)")
        try:
            argv = shlex.split(self.command)
            proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout_s)
        except subprocess.TimeoutExpired:
            return "unknown", "timeout"
        except (OSError, ValueError) as exc:
            raise SolverError("BACKEND_SPAWN", f"cannot run {self.command!r}: {exc}") from None
        sexps = parse_sexps(proc.stdout)
        if not sexps or not isinstance(sexps[0], str):
            raise SolverError("BACKEND_PROTOCOL", f"unexpected reply {proc.stdout[:80]!r}")
        status = sexps[0]
        if status == "unsat":
            return "unsat", None
        if status == "unknown":
            return "unknown", "unsupported"
        if status != "sat":
            raise SolverError("BACKEND_PROTOCOL", f"unexpected status {status!r}")
        values: Dict[str, object] = {}
        for block in sexps[1:]:
            if not isinstance(block, list):
                raise SolverError("BACKEND_PROTOCOL", f"unexpected reply item {block!r}")
            for pair in block:
                if not isinstance(pair, list) or len(pair) != 2 or not isinstance(pair[0], str):
                    raise SolverError("BACKEND_PROTOCOL", f"bad value pair {pair!r}")
                values[_unident(pair[0])] = pair[1]
        lit_by_elem = {}
        for s, name in printer.strings.items():
            if name in values:
                lit_by_elem[repr(values[name])] = s
        fresh_names: Dict[str, str] = {}
        model = {}
        for name, ty in sorted(types.items()):
            if name not in values:
                raise SolverError("BACKEND_PROTOCOL", f"no value for {name}")
            raw = values[name]
            if ty == INT:
                v = _num_value(raw)
                if v.denominator != 1:
                    raise SolverError("BACKEND_PROTOCOL", f"non-integer value for {name}")
                model[name] = int(v)
            elif ty == RAT:
                model[name] = _num_value(raw)
            elif ty == BOOL:
                if raw not in ("true", "false"):
                    raise SolverError("BACKEND_PROTOCOL", f"bad boolean {raw!r}")
                model[name] = raw == "true"
            elif ty == STR:
                key = repr(raw)
                if key in lit_by_elem:
                    model[name] = lit_by_elem[key]
                else:
                    if key not in fresh_names:
                        i = len(fresh_names)
                        while f"s{i}" in printer.strings:
                            i += 1
                        fresh_names[key] = f"s{i}"
                    model[name] = fresh_names[key]
            else:
                if not isinstance(raw, str) or "__" not in raw:
                    raise SolverError("BACKEND_PROTOCOL", f"bad enum value {raw!r}")
                en, variant = raw.split("__", 1)
                model[name] = EnumVal(en, variant)
        if formulas and eval_concrete(And(tuple(formulas)), model) is not True:
            raise SolverError("BACKEND_PROTOCOL", "backend model does not satisfy the assertions")
        return "sat", model
