"""Type tags and concrete values shared by every layer of the engine."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import ExecutionError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class TypeTag:
    kind: str  # "int" | "rat" | "bool" | "string" | "enum"
    enum: Optional[str] = None

    def __str__(self) -> str:
        return self.enum if self.kind == "enum" else self.kind

    @property
    def numeric(self) -> bool:
        return self.kind in ("int", "rat")


INT = TypeTag("int")
RAT = TypeTag("rat")
BOOL = TypeTag("bool")
STR = TypeTag("string")


def enum_type(name: str) -> TypeTag:
    return TypeTag("enum", name)


@dataclass(frozen=True)
class EnumVal:
    enum: str
    variant: str

    def __str__(self) -> str:
        return f"{self.enum}::{self.variant}"


class _Null:
    """Message-absence marker; a single shared instance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NULL"

    def __reduce__(self):
        return (_Null, ())


NULL = _Null()

Value = Union[int, Fraction, bool, str, EnumVal, _Null]


def is_null(v) -> bool:
    return v is NULL


def check_int(v: int) -> int:
    if v < INT64_MIN or v > INT64_MAX:
        raise ExecutionError("OVERFLOW", f"integer overflow: {v}")
    return v


def type_of_value(v) -> Optional[TypeTag]:
    if v is NULL:
        return None
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, Fraction):
        return RAT
    if isinstance(v, str):
        return STR
    if isinstance(v, EnumVal):
        return enum_type(v.enum)
    raise TypeError(f"not a model value: {v!r}")


def conforms(v, ty: TypeTag) -> bool:
    """True if ``v`` may be stored in a slot of type ``ty`` (Null always may)."""
    if v is NULL:
        return True
    vt = type_of_value(v)
    if vt == ty:
        return True
    return ty == RAT and vt == INT


def coerce(v, ty: TypeTag):
    """Promote ints stored into rational slots; everything else is returned as is."""
    if ty == RAT and isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


def default_value(ty: TypeTag, enums: Optional[dict] = None):
    if ty == INT:
        return 0
    if ty == RAT:
        return Fraction(0)
    if ty == BOOL:
        return False
    if ty == STR:
        return ""
    if ty.kind == "enum":
        if not enums or ty.enum not in enums:
            raise KeyError(f"unknown enum {ty.enum}")
        return EnumVal(ty.enum, enums[ty.enum][0])
    raise ValueError(f"no default for {ty}")


def format_rational(q: Fraction) -> str:
    """Decimal text when the expansion terminates, ``n/d`` otherwise."""
    q = Fraction(q)
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives, 1)
    scaled = abs(q) * 10**digits
    whole, frac = divmod(int(scaled), 10**digits)
    text = f"{whole}.{str(frac).rjust(digits, '0')}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return ("-" if q < 0 else "") + text


def format_value(v) -> str:
    if v is NULL:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, str):
        return quote_string(v)
    if isinstance(v, EnumVal):
        return str(v)
    raise TypeError(f"not a model value: {v!r}")


def quote_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def value_key(v) -> tuple:
    """Hashable, type-distinguishing key (``True`` and ``1`` must not collide)."""
    if v is NULL:
        return ("null",)
    if isinstance(v, bool):
        return ("bool", v)
    if isinstance(v, (int, Fraction)):
        return ("num", Fraction(v))
    if isinstance(v, str):
        return ("str", v)
    if isinstance(v, EnumVal):
        return ("enum", v.enum, v.variant)
    raise TypeError(f"not a model value: {v!r}")


def value_to_json(v):
    if v is NULL:
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, str):
        return v
    if isinstance(v, EnumVal):
        return str(v)
    raise TypeError(f"not a model value: {v!r}")


def value_from_json(raw, ty: TypeTag, enums: Optional[dict] = None):
    """Inverse of :func:`value_to_json`, driven by the declared slot type."""
    if raw is None:
        return NULL
    if ty == INT:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueError(f"expected int, got {raw!r}")
        return check_int(raw)
    if ty == RAT:
        if isinstance(raw, bool):
            raise ValueError(f"expected rational, got {raw!r}")
        if isinstance(raw, int):
            return Fraction(raw)
        if isinstance(raw, float):
            return Fraction(str(raw))
        if isinstance(raw, str):
            try:
                return Fraction(raw.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"bad rational {raw!r}") from exc
        raise ValueError(f"expected rational, got {raw!r}")
    if ty == BOOL:
        if not isinstance(raw, bool):
            raise ValueError(f"expected bool, got {raw!r}")
        return raw
    if ty == STR:
        if not isinstance(raw, str):
            raise ValueError(f"expected string, got {raw!r}")
        return raw
    if ty.kind == "enum":
        if not isinstance(raw, str):
            raise ValueError(f"expected enum literal, got {raw!r}")
        variant = raw.split("::", 1)[1] if "::" in raw else raw
        if raw.count("::") == 1 and raw.split("::")[0] != ty.enum:
            raise ValueError(f"{raw!r} is not a {ty.enum} literal")
        if enums is not None and variant not in enums.get(ty.enum, ()):
            raise ValueError(f"{raw!r} is not a {ty.enum} variant")
        return EnumVal(ty.enum, variant)
    raise ValueError(f"unsupported type {ty}")


def parse_value_text(text: str, ty: TypeTag, enums: Optional[dict] = None):
    """Parse a command-line scalar (``400000``, ``1.5``, ``true``, ``E::V``)."""
    text = text.strip()
    if ty == INT:
        return check_int(int(text))
    if ty == RAT:
        return Fraction(text)
    if ty == BOOL:
        if text not in ("true", "false"):
            raise ValueError(f"expected true/false, got {text!r}")
        return text == "true"
    if ty == STR:
        return text
    return value_from_json(text, ty, enums)
