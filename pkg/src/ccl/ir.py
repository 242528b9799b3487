"""Architecture-model IR: components, ports, automata, and structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .errors import FlattenError, SymbolicError
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
    walk,
)
from .values import BOOL, INT, RAT, STR, TypeTag, coerce, conforms, format_value, type_of_value


@dataclass(frozen=True)
class EnumDecl:
    name: str
    variants: Tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "in" | "out"
    ty: TypeTag
    delayed: bool = False
    initial: Optional[object] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Transition:
    id: str
    source: str
    target: str
    guard: Expr
    actions: Tuple[Tuple[str, Expr], ...] = ()
    emissions: Tuple[Tuple[str, Expr], ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarDecl:
    name: str
    ty: TypeTag
    initial: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Automaton:
    initial: str
    vars: Tuple[VarDecl, ...] = ()
    transitions: Tuple[Transition, ...] = ()

    @property
    def states(self) -> Tuple[str, ...]:
        seen = [self.initial]
        for t in self.transitions:
            for s in (t.source, t.target):
                if s not in seen:
                    seen.append(s)
        return tuple(seen)


@dataclass(frozen=True)
class Endpoint:
    instance: Optional[str]  # None = the enclosing component's own port
    port: str

    def __str__(self) -> str:
        return f"{self.instance}.{self.port}" if self.instance else self.port


@dataclass(frozen=True)
class Connector:
    source: Endpoint
    target: Endpoint
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SubInstance:
    name: str
    component: str
    args: Tuple[Expr, ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Composite:
    subs: Tuple[SubInstance, ...] = ()
    connectors: Tuple[Connector, ...] = ()


@dataclass(frozen=True)
class Component:
    name: str
    params: Tuple[Tuple[str, TypeTag], ...]
    ports: Tuple[Port, ...]
    body: Union[Automaton, Composite]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    @property
    def atomic(self) -> bool:
        return isinstance(self.body, Automaton)

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    @property
    def in_ports(self) -> Tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "in")

    @property
    def out_ports(self) -> Tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == "out")


@dataclass(frozen=True)
class Model:
    enums: Tuple[EnumDecl, ...]
    components: Tuple[Component, ...]
    root: str

    def component(self, name: str) -> Optional[Component]:
        for c in self.components:
            if c.name == name:
                return c
        return None

    @property
    def enum_map(self) -> Dict[str, Tuple[str, ...]]:
        return {e.name: e.variants for e in self.enums}

    @property
    def root_component(self) -> Component:
        comp = self.component(self.root)
        if comp is None:
            raise KeyError(self.root)
        return comp


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code}: {self.message}"

    def to_json(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.span:
            out["line"] = self.span.line
            out["column"] = self.span.column
        return out


def _is_constant(e: Expr, params: set) -> bool:
    return all(not isinstance(n, Var) or n.name in params for n in walk(e))


class _Checker:
    def __init__(self, model: Model):
        self.m = model
        self.diags: List[Diagnostic] = []
        self.enums = {}
        for e in model.enums:
            if e.name in self.enums:
                self.err("DUPLICATE_NAME", f"enum {e.name} declared twice", e.span)
            if not e.variants:
                self.err("EMPTY_ENUM", f"enum {e.name} has no variants", e.span)
            if len(set(e.variants)) != len(e.variants):
                self.err("DUPLICATE_NAME", f"enum {e.name} repeats a variant", e.span)
            self.enums[e.name] = e.variants

    def err(self, code, msg, span=None):
        self.diags.append(Diagnostic(code, msg, span))

    def check_type(self, ty: TypeTag, span) -> bool:
        if ty.kind == "enum" and ty.enum not in self.enums:
            self.err("UNKNOWN_ENUM", f"unknown type {ty.enum}", span)
            return False
        return True

    def check_literal(self, v, ty: TypeTag, what: str, span):
        if not conforms(v, ty) or v is None:
            self.err("TYPE_MISMATCH", f"{what}: {format_value(v) if v is not None else '?'} is not {ty}", span)
            return
        if ty.kind == "enum" and v.variant not in self.enums.get(ty.enum, ()):
            self.err("UNKNOWN_ENUM", f"{what}: {v} is not a variant of {ty.enum}", span)

    # expression typing; returns the type or None after reporting
    def expr_type(self, e: Expr, scope: dict, params: set, ctx: str) -> Optional[TypeTag]:
        span = getattr(e, "span", None)
        if isinstance(e, Const):
            if isinstance(e.value, type(None)):
                return None
            if e.ty is not None and e.ty.kind == "enum":
                if e.ty.enum not in self.enums:
                    self.err("UNKNOWN_ENUM", f"{ctx}: unknown enum {e.ty.enum}", span)
                    return None
                if e.value.variant not in self.enums[e.ty.enum]:
                    self.err("UNKNOWN_ENUM", f"{ctx}: {e.value} is not a variant", span)
                    return None
            return e.ty
        if isinstance(e, Var):
            if e.name not in scope:
                self.err("UNKNOWN_NAME", f"{ctx}: unknown name {e.name}", span)
                return None
            return scope[e.name]
        if isinstance(e, Neg):
            t = self.expr_type(e.arg, scope, params, ctx)
            if t is not None and not t.numeric:
                self.err("TYPE_MISMATCH", f"{ctx}: negation of {t}", span)
                return None
            return t
        if isinstance(e, (Add, Sub, Mul)):
            lt = self.expr_type(e.left, scope, params, ctx)
            rt = self.expr_type(e.right, scope, params, ctx)
            if lt is None or rt is None:
                return None
            if not (lt.numeric and rt.numeric):
                self.err("TYPE_MISMATCH", f"{ctx}: arithmetic on {lt} and {rt}", span)
                return None
            if isinstance(e, Mul) and not (_is_constant(e.left, params) or _is_constant(e.right, params)):
                self.err("NONLINEAR", f"{ctx}: product of two non-constant terms", span)
                return None
            return RAT if RAT in (lt, rt) else INT
        if isinstance(e, Not):
            t = self.expr_type(e.arg, scope, params, ctx)
            if t is not None and t != BOOL:
                self.err("TYPE_MISMATCH", f"{ctx}: '!' applied to {t}", span)
            return BOOL
        if isinstance(e, (And, Or)):
            for a in e.args:
                t = self.expr_type(a, scope, params, ctx)
                if t is not None and t != BOOL:
                    self.err("TYPE_MISMATCH", f"{ctx}: boolean connective over {t}", span)
            return BOOL
        if isinstance(e, Cmp):
            lt = self.expr_type(e.left, scope, params, ctx)
            rt = self.expr_type(e.right, scope, params, ctx)
            if lt is None or rt is None:
                return BOOL
            if lt.numeric and rt.numeric:
                return BOOL
            if lt != rt:
                self.err("TYPE_MISMATCH", f"{ctx}: comparing {lt} with {rt}", span)
            elif e.op not in ("==", "!="):
                self.err("TYPE_MISMATCH", f"{ctx}: ordering comparison on {lt}", span)
            return BOOL
        self.err("TYPE_MISMATCH", f"{ctx}: unsupported expression", span)
        return None

    def run(self) -> List[Diagnostic]:
        m = self.m
        names = set()
        for c in m.components:
            if c.name in names:
                self.err("DUPLICATE_NAME", f"component {c.name} declared twice", c.span)
            names.add(c.name)
        if m.component(m.root) is None:
            self.err("MISSING_ROOT", f"root component {m.root!r} not declared")
        for c in m.components:
            self.check_component(c)
        self.check_recursion()
        if not any(d.code == "RECURSIVE_INSTANTIATION" for d in self.diags):
            self.check_cycles()
        return self.diags

    def check_component(self, c: Component):
        scope_names = set()
        params = set()
        for pname, pty in c.params:
            if pname in scope_names:
                self.err("DUPLICATE_NAME", f"{c.name}: duplicate name {pname}", c.span)
            scope_names.add(pname)
            params.add(pname)
            self.check_type(pty, c.span)
        for p in c.ports:
            if p.name in scope_names:
                self.err("DUPLICATE_NAME", f"{c.name}: duplicate name {p.name}", p.span)
            scope_names.add(p.name)
            self.check_type(p.ty, p.span)
            if p.delayed:
                if p.direction != "out":
                    self.err("DELAYED_INPUT", f"{c.name}.{p.name}: only output ports may be delayed", p.span)
                if p.initial is None:
                    self.err("DELAYED_INIT", f"{c.name}.{p.name}: delayed port needs an initial value", p.span)
                else:
                    self.check_literal(p.initial, p.ty, f"{c.name}.{p.name} initial", p.span)
            elif p.initial is not None:
                self.err("DELAYED_INIT", f"{c.name}.{p.name}: initial value on a non-delayed port", p.span)
        if isinstance(c.body, Automaton):
            self.check_automaton(c, c.body, scope_names, params)
        else:
            self.check_composite(c, c.body, scope_names, params)

    def check_automaton(self, c: Component, a: Automaton, scope_names: set, params: set):
        ptypes = dict(c.params)
        scope = {n: t for n, t in ptypes.items()}
        for p in c.in_ports:
            scope[p.name] = p.ty
        var_types = {}
        for v in a.vars:
            if v.name in scope_names:
                self.err("DUPLICATE_NAME", f"{c.name}: duplicate name {v.name}", v.span)
            scope_names.add(v.name)
            self.check_type(v.ty, v.span)
            if not isinstance(v.initial, Const):
                self.err("VAR_INIT_NOT_CONSTANT", f"{c.name}.{v.name}: initial value must be a literal", v.span)
            else:
                self.check_literal(v.initial.value, v.ty, f"{c.name}.{v.name} initial", v.span)
            var_types[v.name] = v.ty
        scope.update(var_types)
        out_types = {p.name: p.ty for p in c.out_ports}
        ids = set()
        for t in a.transitions:
            where = f"{c.name}.{t.id}"
            if t.id in ids:
                self.err("DUPLICATE_NAME", f"{where}: duplicate transition id", t.span)
            ids.add(t.id)
            gt = self.expr_type(t.guard, scope, params, where)
            if gt is not None and gt != BOOL:
                self.err("TYPE_MISMATCH", f"{where}: guard is {gt}, not bool", t.span)
            assigned = set()
            for name, e in t.actions:
                if name not in var_types:
                    self.err("ASSIGN_TO_NON_VAR", f"{where}: {name} is not an internal variable", t.span)
                    continue
                if name in assigned:
                    self.err("DUPLICATE_ASSIGN", f"{where}: {name} assigned twice", t.span)
                assigned.add(name)
                et = self.expr_type(e, scope, params, where)
                self._check_assignable(et, var_types[name], where, name, t.span)
            emitted = set()
            for name, e in t.emissions:
                if name not in out_types:
                    self.err("EMIT_TO_NON_OUTPUT", f"{where}: {name} is not an output port", t.span)
                    continue
                if name in emitted:
                    self.err("DUPLICATE_EMIT", f"{where}: {name} emitted twice", t.span)
                emitted.add(name)
                et = self.expr_type(e, scope, params, where)
                self._check_assignable(et, out_types[name], where, name, t.span)

    def _check_assignable(self, et, target: TypeTag, where, name, span):
        if et is None:
            return
        if et == target or (target == RAT and et == INT):
            return
        self.err("TYPE_MISMATCH", f"{where}: {et} value stored into {name}: {target}", span)

    def check_composite(self, c: Component, body: Composite, scope_names: set, params: set):
        ptypes = dict(c.params)
        subs = {}
        for s in body.subs:
            if s.name in subs or s.name in scope_names:
                self.err("DUPLICATE_NAME", f"{c.name}: duplicate instance name {s.name}", s.span)
            subs[s.name] = s
            target = self.m.component(s.component)
            if target is None:
                self.err("UNKNOWN_COMPONENT", f"{c.name}.{s.name}: unknown component {s.component}", s.span)
                continue
            if len(s.args) != len(target.params):
                self.err(
                    "ARITY_MISMATCH",
                    f"{c.name}.{s.name}: {s.component} takes {len(target.params)} arguments, got {len(s.args)}",
                    s.span,
                )
                continue
            for arg, (pname, pty) in zip(s.args, target.params):
                where = f"{c.name}.{s.name}({pname})"
                if not _is_constant(arg, params):
                    self.err("UNKNOWN_NAME", f"{where}: argument must be built from constants and parameters", s.span)
                    continue
                at = self.expr_type(arg, ptypes, params, where)
                self._check_assignable(at, pty, where, pname, s.span)

        def resolve(ep: Endpoint):
            if ep.instance is None:
                p = c.port(ep.port)
                if p is None:
                    self.err("UNKNOWN_PORT", f"{c.name}: no port {ep.port}")
                return p, "self"
            s = subs.get(ep.instance)
            if s is None:
                self.err("UNKNOWN_INSTANCE", f"{c.name}: no instance {ep.instance}")
                return None, None
            comp = self.m.component(s.component)
            if comp is None:
                return None, None
            p = comp.port(ep.port)
            if p is None:
                self.err("UNKNOWN_PORT", f"{c.name}: {s.component} has no port {ep.port}")
            return p, "sub"

        incoming: Dict[Endpoint, int] = {}
        for conn in body.connectors:
            sp, skind = resolve(conn.source)
            tp, tkind = resolve(conn.target)
            if sp is None or tp is None:
                continue
            src_ok = (skind == "self" and sp.direction == "in") or (skind == "sub" and sp.direction == "out")
            dst_ok = (tkind == "self" and tp.direction == "out") or (tkind == "sub" and tp.direction == "in")
            if not src_ok or not dst_ok:
                self.err("CONNECTOR_DIRECTION", f"{c.name}: {conn.source} -> {conn.target} has wrong direction", conn.span)
                continue
            if not (sp.ty == tp.ty or (tp.ty == RAT and sp.ty == INT)):
                self.err("CONNECTOR_TYPE", f"{c.name}: {conn.source}: {sp.ty} -> {conn.target}: {tp.ty}", conn.span)
            incoming[conn.target] = incoming.get(conn.target, 0) + 1
        for ep, n in incoming.items():
            if n > 1:
                self.err("FAN_IN", f"{c.name}: {ep} has {n} incoming connectors")
        for p in c.out_ports:
            if Endpoint(None, p.name) not in incoming:
                self.err("UNCONNECTED_PORT", f"{c.name}: output {p.name} is not driven")
        for s in body.subs:
            comp = self.m.component(s.component)
            if comp is None:
                continue
            for p in comp.in_ports:
                if Endpoint(s.name, p.name) not in incoming:
                    self.err("UNCONNECTED_PORT", f"{c.name}: input {s.name}.{p.name} is not driven", s.span)

    def check_recursion(self):
        state: Dict[str, int] = {}

        def visit(name: str, chain: List[str]):
            comp = self.m.component(name)
            if comp is None or comp.atomic:
                return
            if state.get(name) == 1:
                self.err("RECURSIVE_INSTANTIATION", " -> ".join(chain + [name]))
                return
            if state.get(name) == 2:
                return
            state[name] = 1
            for s in comp.body.subs:
                visit(s.component, chain + [name])
            state[name] = 2

        for c in self.m.components:
            visit(c.name, [])

    def check_cycles(self):
        if self.m.component(self.m.root) is None or any(
            d.code in ("UNKNOWN_COMPONENT", "UNKNOWN_INSTANCE", "UNKNOWN_PORT") for d in self.diags
        ):
            return
        try:
            wiring = structural_wiring(self.m)
        except KeyError:
            return
        order = topological_order(wiring)
        if order is None:
            cyc = find_cycle(wiring)
            self.err("CYCLE_NO_DELAY", "feedback loop without a delayed port: " + " -> ".join(cyc))


def validate_model(m: Model) -> List[Diagnostic]:
    """Every well-formedness violation of ``m``; an empty list means valid."""
    return _Checker(m).run()


# -- structural wiring (shared by validation and flattening) -------------------


@dataclass
class Wiring:
    """Instance tree resolved down to atomic components.

    ``atomics`` lists atomic instance paths in declaration pre-order.
    ``sources`` maps ``(path, in_port)`` of an atomic instance, and
    ``("", root_out)`` for root outputs, to a ``Signal``.
    """

    atomics: List[str]
    sources: Dict[Tuple[str, str], "Signal"]
    delayed: Dict[Tuple[str, str], "DelayedSlot"]
    components: Dict[str, Component]
    sub_args: Dict[str, Tuple[Expr, ...]]


@dataclass(frozen=True)
class Signal:
    """Where a value comes from: a root input, an atomic output, or a delay slot."""

    kind: str  # "input" | "atomic" | "delay"
    path: str
    port: str


@dataclass(frozen=True)
class DelayedSlot:
    path: str
    port: str
    initial: object
    feed: Signal  # value stored at the end of every tick


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def structural_wiring(m: Model) -> Wiring:
    comps: Dict[str, Component] = {}
    sub_args: Dict[str, Tuple[Expr, ...]] = {}
    atomics: List[str] = []
    # raw links: (path, port) endpoint -> (path, port) endpoint feeding it
    feeds: Dict[Tuple[str, str], Tuple[str, str]] = {}

    def expand(path: str, comp: Component):
        comps[path] = comp
        if comp.atomic:
            atomics.append(path)
            return
        for s in comp.body.subs:
            child = m.component(s.component)
            if child is None:
                raise KeyError(s.component)
            cpath = _join(path, s.name)
            sub_args[cpath] = s.args
            expand(cpath, child)
        for conn in comp.body.connectors:
            src = (_join(path, conn.source.instance) if conn.source.instance else path, conn.source.port)
            dst = (_join(path, conn.target.instance) if conn.target.instance else path, conn.target.port)
            feeds[dst] = src

    expand("", m.root_component)
    delayed: Dict[Tuple[str, str], DelayedSlot] = {}
    memo: Dict[Tuple[str, str], Signal] = {}

    def port_of(path: str, port: str) -> Port:
        p = comps[path].port(port)
        if p is None:
            raise KeyError(port)
        return p

    def resolve(path: str, port: str, through_delay: bool = True, seen=()) -> Signal:
        """Signal carried by the output/input port ``(path, port)``."""
        key = (path, port)
        if key in seen:
            raise KeyError("unresolvable loop")
        p = port_of(path, port)
        if p.direction == "out" and p.delayed and through_delay:
            if key not in delayed:
                delayed[key] = None  # placeholder to break recursion
                feed = resolve(path, port, through_delay=False, seen=seen)
                delayed[key] = DelayedSlot(path, port, coerce(p.initial, p.ty), feed)
            return Signal("delay", path, port)
        if p.direction == "out" and comps[path].atomic:
            return Signal("atomic", path, port)
        if p.direction == "in" and path == "":
            return Signal("input", "", port)
        if key not in feeds:
            raise KeyError(f"undriven {path}.{port}")
        src = feeds[key]
        return resolve(src[0], src[1], True, seen + (key,))

    sources: Dict[Tuple[str, str], Signal] = {}
    for path in atomics:
        for p in comps[path].in_ports:
            sources[(path, p.name)] = resolve(path, p.name)
    for p in comps[""].out_ports:
        sources[("", p.name)] = resolve("", p.name)
    # delayed slots discovered while resolving may themselves need their feeds
    return Wiring(atomics, sources, delayed, comps, sub_args)


def _feeds_input(w: Wiring, path: str, port: str) -> bool:
    p = w.components[path].port(port)
    return p is not None and p.direction == "in"


def topological_order(w: Wiring) -> Optional[List[str]]:
    """Atomic firing order over non-delayed links; ``None`` on a cycle.

    Ties are broken by declaration pre-order so the result is deterministic.
    """
    deps: Dict[str, set] = {a: set() for a in w.atomics}
    for (path, port), sig in w.sources.items():
        if path in deps and sig.kind == "atomic" and _feeds_input(w, path, port):
            deps[path].add(sig.path)
    rank = {a: i for i, a in enumerate(w.atomics)}
    done: List[str] = []
    remaining = set(w.atomics)
    while remaining:
        ready = [a for a in remaining if deps[a] <= set(done)]
        if not ready:
            return None
        nxt = min(ready, key=rank.__getitem__)
        done.append(nxt)
        remaining.discard(nxt)
    return done


def find_cycle(w: Wiring) -> List[str]:
    deps: Dict[str, List[str]] = {a: [] for a in w.atomics}
    for (path, port), sig in w.sources.items():
        if path in deps and sig.kind == "atomic" and _feeds_input(w, path, port):
            deps[path].append(sig.path)
    color: Dict[str, int] = {}
    stack: List[str] = []

    def dfs(a):
        color[a] = 1
        stack.append(a)
        for b in deps[a]:
            if color.get(b) == 1:
                return stack[stack.index(b):] + [b]
            if not color.get(b):
                r = dfs(b)
                if r:
                    return r
        stack.pop()
        color[a] = 2
        return None

    for a in w.atomics:
        if not color.get(a):
            r = dfs(a)
            if r:
                return [x or "<root>" for x in r]
    return []


# -- flattening ------------------------------------------------------------------


@dataclass
class FlatInstance:
    """A model instantiated with concrete root arguments, ready for execution."""

    model: Model
    root_args: Tuple[object, ...]
    params: Dict[str, Dict[str, object]]  # instance path -> parameter values
    components: Dict[str, Component]  # instance path -> component
    firing_order: List[str]
    sources: Dict[Tuple[str, str], Signal]
    delayed: Dict[Tuple[str, str], DelayedSlot]

    @property
    def root(self) -> Component:
        return self.components[""]

    @property
    def enums(self) -> Dict[str, Tuple[str, ...]]:
        return self.model.enum_map

    @property
    def atomics(self) -> List[str]:
        return self.firing_order

    def automaton(self, path: str) -> Automaton:
        return self.components[path].body

    def transition_count(self) -> int:
        return sum(len(self.automaton(p).transitions) for p in self.firing_order)

    def state_count(self) -> int:
        return sum(len(self.automaton(p).states) for p in self.firing_order)


def fold_constant(e: Expr, env: Dict[str, object]):
    """Evaluate a parameter expression to a concrete value."""
    from .symbolic import eval_concrete

    try:
        return eval_concrete(e, env)
    except SymbolicError as exc:
        raise FlattenError("TYPE_MISMATCH", str(exc)) from exc


def flatten(m: Model, root_args=()) -> FlatInstance:
    """Bind parameters top-down and resolve connectors to atomic signals."""
    root = m.root_component
    root_args = tuple(root_args)
    if len(root_args) != len(root.params):
        raise FlattenError(
            "ARITY_MISMATCH", f"{root.name} takes {len(root.params)} arguments, got {len(root_args)}"
        )
    bound = {}
    for v, (pname, pty) in zip(root_args, root.params):
        if not conforms(v, pty) or v is None or type_of_value(v) is None:
            raise FlattenError("TYPE_MISMATCH", f"argument {pname}: {v!r} is not {pty}")
        if pty.kind == "enum" and v.variant not in m.enum_map.get(pty.enum, ()):
            raise FlattenError("TYPE_MISMATCH", f"argument {pname}: {v} is not a {pty.enum} variant")
        bound[pname] = coerce(v, pty)
    try:
        w = structural_wiring(m)
    except KeyError as exc:
        raise FlattenError("INVALID_MODEL", f"cannot resolve wiring: {exc}") from exc
    params: Dict[str, Dict[str, object]] = {"": bound}
    for path in w.components:
        if path == "":
            continue
        parent = path.rsplit(".", 1)[0] if "." in path else ""
        comp = w.components[path]
        args = w.sub_args[path]
        env = params[parent]
        vals = {}
        for arg, (pname, pty) in zip(args, comp.params):
            v = fold_constant(arg, env)
            if not conforms(v, pty):
                raise FlattenError("TYPE_MISMATCH", f"{path}({pname}): {v!r} is not {pty}")
            vals[pname] = coerce(v, pty)
        params[path] = vals
    order = topological_order(w)
    if order is None:
        raise FlattenError("CYCLE_NO_DELAY", "feedback loop without a delayed port: " + " -> ".join(find_cycle(w)))
    return FlatInstance(m, root_args, params, w.components, order, w.sources, w.delayed)
