"""``ccl`` command-line entry point.

Every command prints one JSON envelope on stdout::

    {"schema": 1, "command": ..., "version": ..., "config": ..., "wall_ms": ..., "result": ...}

Exit codes: 0 success, 1 findings (diagnostics, witnesses, exhausted budget),
2 errors (bad usage, unreadable files, Unknown verdicts).
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from . import __version__
from .analyses import coverage, minimality, nondet_pairs, redundancy_pairs
from .bruteforce import DEFAULT_CAP, brute_diff, enumerate_runs, feasible_path_classes
from .controllers import CONTROLLERS, ControllerConfig, explore
from .errors import BudgetExceeded, CclError, ParseError
from .executor import Oracle, default_oracle, run, trace_to_json
from .ir import FlatInstance, flatten, validate_model
from .parser import parse_model
from .semdiff import DEFAULT_ORACLE_BOUND, semantic_diff_flat
from .schemas import SCHEMA_VERSION
from .values import parse_value_text, value_from_json, value_to_json

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


class UsageError(CclError):
    code = "USAGE"


@dataclass
class SweepRow:
    timeout_ms: int
    time_improvement: float
    result_deterioration: float
    median_ms: float
    interesting: int
    skipped_timeout: int

    def to_json(self) -> dict:
        return {
            "timeout_ms": self.timeout_ms,
            "time_improvement": self.time_improvement,
            "result_deterioration": self.result_deterioration,
            "median_ms": self.median_ms,
            "interesting": self.interesting,
            "paths_skipped_timeout": self.skipped_timeout,
        }


def sweep_row(timeout_ms: int, t: float, n: int, t_base: float, n_base: int, skipped: int = 0) -> SweepRow:
    improvement = 1 - t / t_base if t_base > 0 else 0.0
    deterioration = 1 - n / n_base if n_base > 0 else 0.0
    return SweepRow(timeout_ms, improvement, deterioration, t, n, skipped)


# -- loading -----------------------------------------------------------------------------


def _read_text(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError("IO_ERROR", f"cannot read {path}: {exc.strerror}") from None


def _load_json(arg: str):
    """Inline JSON or a path to a JSON file."""
    text = arg if arg.lstrip()[:1] in ("[", "{") else _read_text(arg).decode("utf-8", "replace")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError("BAD_JSON", f"{arg}: {exc}") from None


def _load_model(path: str):
    m = parse_model(_read_text(path), path)
    diags = validate_model(m)
    if diags:
        raise ParseError(diags)
    return m


def _parse_args_list(text: Optional[str], m) -> list:
    params = m.root_component.params
    if not text:
        raw = []
    else:
        raw = [t for t in text.split(",")]
    if len(raw) != len(params):
        raise UsageError("ARITY_MISMATCH", f"{m.root_component.name} takes {len(params)} arguments, got {len(raw)}")
    out = []
    for t, (name, ty) in zip(raw, params):
        try:
            out.append(parse_value_text(t, ty, m.enum_map))
        except ValueError as exc:
            raise UsageError("BAD_ARGUMENT", f"argument {name}: {exc}") from None
    return out


def _load_flat(path: str, args_text: Optional[str]) -> FlatInstance:
    m = _load_model(path)
    return flatten(m, _parse_args_list(args_text, m))


def _port_values(flat: FlatInstance, raw: dict, where: str) -> dict:
    if not isinstance(raw, dict):
        raise UsageError("BAD_INPUTS", f"{where}: expected an object of port values")
    ports = {p.name: p.ty for p in flat.root.in_ports}
    unknown = sorted(set(raw) - set(ports))
    if unknown:
        raise UsageError("BAD_INPUTS", f"{where}: unknown input port {unknown[0]}")
    out = {}
    for name, ty in ports.items():
        if name not in raw:
            raise UsageError("BAD_INPUTS", f"{where}: missing input port {name}")
        try:
            out[name] = value_from_json(raw[name], ty, flat.enums)
        except ValueError as exc:
            raise UsageError("BAD_INPUTS", f"{where}: {name}: {exc}") from None
    return out


def _load_inputs(flat: FlatInstance, arg: str) -> List[dict]:
    raw = _load_json(arg)
    if not isinstance(raw, list):
        raise UsageError("BAD_INPUTS", "inputs must be a JSON list of per-tick port maps")
    return [_port_values(flat, t, f"tick {i}") for i, t in enumerate(raw, start=1)]


def _load_domain(flat: FlatInstance, arg: Optional[str]) -> Optional[Dict[str, list]]:
    if arg is None:
        return None
    raw = _load_json(arg)
    if not isinstance(raw, dict):
        raise UsageError("BAD_DOMAIN", "domain must be a JSON object port -> [values]")
    ports = {p.name: p.ty for p in flat.root.in_ports}
    out = {}
    for name, values in raw.items():
        if name not in ports:
            raise UsageError("BAD_DOMAIN", f"unknown input port {name}")
        if not isinstance(values, list) or not values:
            raise UsageError("BAD_DOMAIN", f"domain of {name} must be a non-empty list")
        try:
            out[name] = [value_from_json(v, ports[name], flat.enums) for v in values]
        except ValueError as exc:
            raise UsageError("BAD_DOMAIN", f"{name}: {exc}") from None
    return out


def _int_list(text: str, flag: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError("USAGE", f"{flag} expects comma-separated integers") from None


def _controller_config(ns, flat: FlatInstance) -> ControllerConfig:
    interesting = frozenset(t for t in (ns.interesting or "").split(",") if t)
    return ControllerConfig(
        kind=ns.controller,
        input_length=ns.input_length,
        max_visits=ns.max_visits,
        iterations=ns.iterations,
        seed=ns.seed,
        solver_timeout_ms=ns.solver_timeout_ms,
        solver_cmd=ns.solver_cmd or os.environ.get("CCL_SOLVER_CMD") or None,
        interesting=interesting,
        max_boring=ns.max_boring,
        max_interesting=ns.max_interesting,
        domain=_load_domain(flat, ns.domain),
        split_domain=ns.split_domain,
        max_paths=ns.max_paths,
        max_wall_ms=ns.max_wall_ms,
    )


# -- commands ----------------------------------------------------------------------------


def cmd_validate(ns):
    try:
        m = parse_model(_read_text(ns.model), ns.model)
    except ParseError as exc:
        return {"valid": False, "diagnostics": [d.to_json() for d in exc.diagnostics]}, {}, EXIT_FINDINGS
    diags = validate_model(m)
    result = {
        "valid": not diags,
        "diagnostics": [d.to_json() for d in diags],
        "root": m.root_component.name,
        "components": sorted(c.name for c in m.components),
    }
    return result, {}, EXIT_FINDINGS if diags else EXIT_OK


def cmd_run(ns):
    flat = _load_flat(ns.model, ns.args)
    inputs = _load_inputs(flat, ns.inputs)
    if ns.oracle is not None:
        oracle = Oracle(tuple(_int_list(ns.oracle, "--oracle")))
    else:
        oracle = default_oracle()
    trace = run(flat, inputs, oracle)
    result = trace_to_json(trace)
    result["outputs"] = [{p: value_to_json(av.conc) for p, av in sorted(t.outputs.items())} for t in trace.ticks]
    config = {"args": [value_to_json(a) for a in flat.root_args], "oracle": list(oracle.choices)}
    return result, config, EXIT_OK


def cmd_dse(ns):
    flat = _load_flat(ns.model, ns.args)
    cfg = _controller_config(ns, flat)
    code = EXIT_OK
    try:
        res = explore(flat, cfg)
        result = res.to_json()
    except BudgetExceeded as exc:
        result = exc.partial.to_json()
        result["budget_exceeded"] = exc.message
        code = EXIT_FINDINGS
    return result, cfg.to_json(), code


def cmd_metrics(ns):
    flat = _load_flat(ns.model, ns.args)
    cfg = _controller_config(ns, flat)
    res = explore(flat, cfg)
    result = {
        "minimality": minimality(res).to_json() if res.interesting else None,
        "coverage": coverage(res, flat, ns.with_vars, ns.reachable_bound).to_json(),
        "redundancy": [p.to_json() for p in redundancy_pairs(res)],
        "nondet": nondet_pairs(res, ns.nondet_mode, flat.enums, cfg.solver_timeout_ms, cfg.solver_cmd).to_json(),
        "stats": res.stats.to_json(),
    }
    return result, cfg.to_json(), EXIT_OK


def cmd_semdiff(ns):
    flat1 = _load_flat(ns.model, ns.args1 if ns.args1 is not None else ns.args)
    flat2 = _load_flat(ns.model2, ns.args2 if ns.args2 is not None else ns.args)
    cfg = _controller_config(ns, flat1)
    report = semantic_diff_flat(flat1, flat2, cfg, ns.oracle_bound)
    if report.unknown:
        code = EXIT_ERROR
    elif report.witnesses:
        code = EXIT_FINDINGS
    else:
        code = EXIT_OK
    return report.to_json(), cfg.to_json(), code


def cmd_brute(ns):
    flat1 = _load_flat(ns.model, ns.args1 if ns.args1 is not None else ns.args)
    domain = _load_domain(flat1, ns.domain)
    if domain is None:
        raise UsageError("USAGE", "brute needs --domain")
    config = {"input_length": ns.input_length, "cap": ns.cap, "domain": {p: [value_to_json(v) for v in vs] for p, vs in sorted(domain.items())}}
    if ns.model2:
        flat2 = _load_flat(ns.model2, ns.args2 if ns.args2 is not None else ns.args)
        d = brute_diff(flat1, flat2, domain, ns.input_length, ns.cap)
        return d.to_json(), config, EXIT_FINDINGS if d.witnesses else EXIT_OK
    runs = enumerate_runs(flat1, domain, ns.input_length, ns.cap)
    classes = feasible_path_classes(runs)
    result = {
        "runs": len(runs),
        "path_classes": len(classes),
        "classes": [[_key_text(k) for k in c] for c in sorted(classes, key=repr)],
    }
    return result, config, EXIT_OK


def _key_text(k: tuple) -> str:
    if k[0] == "b":
        (path, tid, tick), taken = k[1], k[2]
        return f"{'' if taken else '!'}{path or '<root>'}/{tid}@{tick}"
    (path, tick), choice = k[1], k[2]
    return f"{path or '<root>'}@{tick}={choice}"


def cmd_sweep(ns):
    flat = _load_flat(ns.model, ns.args)
    timeouts = _int_list(ns.timeouts, "--timeouts")
    if not timeouts or any(t < 1 for t in timeouts):
        raise UsageError("USAGE", "--timeouts needs positive millisecond values")
    if ns.repeats < 1:
        raise UsageError("USAGE", "--repeats must be at least 1")
    ns.solver_timeout_ms = None
    base_cfg = _controller_config(ns, flat)

    def measure(timeout_ms):
        cfg = ControllerConfig(**{**base_cfg.__dict__, "solver_timeout_ms": timeout_ms})
        times, counts, skipped = [], [], []
        for _ in range(ns.repeats):
            started = time.monotonic()
            res = explore(flat, cfg)
            times.append((time.monotonic() - started) * 1000)
            counts.append(len(res.interesting))
            skipped.append(res.stats.paths_skipped_timeout)
        return statistics.median(times), int(statistics.median(counts)), int(statistics.median(skipped))

    t_base, n_base, _ = measure(None)
    rows = []
    for to in timeouts:
        t, n, sk = measure(to)
        rows.append(sweep_row(to, t, n, t_base, n_base, sk))
    result = {
        "baseline": {"median_ms": t_base, "interesting": n_base},
        "rows": [r.to_json() for r in rows],
    }
    config = base_cfg.to_json()
    config.update({"timeouts": timeouts, "repeats": ns.repeats})
    return result, config, EXIT_OK


# -- argument parsing -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver-cmd", default=None, help="external SMT-LIB2 solver command (default: $CCL_SOLVER_CMD)")
    p.add_argument("--solver-timeout-ms", type=int, default=None)


def _controller_flags(p: argparse.ArgumentParser):
    p.add_argument("--controller", choices=CONTROLLERS, default="pc")
    p.add_argument("--input-length", type=int, default=1)
    p.add_argument("--max-visits", type=int, default=1)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--interesting", default=None, help="comma-separated instance/transition names")
    p.add_argument("--max-boring", type=int, default=1)
    p.add_argument("--max-interesting", type=int, default=3)
    p.add_argument("--domain", default=None, help="JSON domain file or inline JSON: port -> [values]")
    p.add_argument("--split-domain", action="store_true", help="enumerate every domain value of every input")
    p.add_argument("--max-paths", type=int, default=None)
    p.add_argument("--max-wall-ms", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccl", description="Concolic exploration of component-and-connector models.")
    parser.add_argument("--version", action="version", version=f"ccl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check a model")
    p.add_argument("model")
    _common(p)

    p = sub.add_parser("run", help="execute one input sequence")
    p.add_argument("model")
    p.add_argument("--args", default=None, help="comma-separated root arguments")
    p.add_argument("--inputs", required=True, help="JSON list of per-tick port maps (file or inline)")
    p.add_argument("--oracle", default=None, help="comma-separated choice indices")
    _common(p)

    for name, helptext in (("dse", "explore a model"), ("metrics", "explore and report analyses")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("model")
        p.add_argument("--args", default=None)
        _controller_flags(p)
        _common(p)
        if name == "metrics":
            p.add_argument("--with-vars", action="store_true")
            p.add_argument("--reachable-bound", type=int, default=None)
            p.add_argument("--nondet-mode", choices=("full", "exists"), default="full")

    p = sub.add_parser("semdiff", help="semantic differences between two models")
    p.add_argument("model")
    p.add_argument("model2")
    p.add_argument("--args", default=None, help="root arguments for both models")
    p.add_argument("--args1", default=None)
    p.add_argument("--args2", default=None)
    p.add_argument("--oracle-bound", type=int, default=DEFAULT_ORACLE_BOUND)
    _controller_flags(p)
    _common(p)

    p = sub.add_parser("brute", help="exhaustive enumeration over a finite domain")
    p.add_argument("model")
    p.add_argument("model2", nargs="?", default=None)
    p.add_argument("--args", default=None)
    p.add_argument("--args1", default=None)
    p.add_argument("--args2", default=None)
    p.add_argument("--domain", required=True)
    p.add_argument("--input-length", type=int, default=1)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    _common(p)

    p = sub.add_parser("sweep", help="solver timeout benchmark")
    p.add_argument("model")
    p.add_argument("--args", default=None)
    p.add_argument("--timeouts", required=True, help="comma-separated budgets in ms")
    p.add_argument("--repeats", type=int, default=3)
    _controller_flags(p)
    _common(p)
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "dse": cmd_dse,
    "metrics": cmd_metrics,
    "semdiff": cmd_semdiff,
    "brute": cmd_brute,
    "sweep": cmd_sweep,
}


def _text(value, indent: int = 0) -> List[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        lines = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
        return lines
    if isinstance(value, list):
        lines = []
        for v in value:
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v)}")
        return lines
    return [f"{pad}{json.dumps(value)}"]


def _emit(envelope: dict, fmt: str, stream):
    if fmt == "text":
        stream.write("\n".join(_text(envelope)) + "\n")
    else:
        stream.write(json.dumps(envelope, sort_keys=True) + "\n")


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    started = time.monotonic()
    try:
        result, config, code = COMMANDS[ns.command](ns)
    except ParseError as exc:
        envelope = {
            "schema": SCHEMA_VERSION,
            "command": ns.command,
            "version": __version__,
            "config": {},
            "wall_ms": round((time.monotonic() - started) * 1000, 3),
            "error": {"code": exc.code, "message": exc.message, "diagnostics": [d.to_json() for d in exc.diagnostics]},
        }
        _emit(envelope, ns.format, stdout)
        stderr.write(f"ccl: {exc}\n")
        return EXIT_ERROR
    except CclError as exc:
        envelope = {
            "schema": SCHEMA_VERSION,
            "command": ns.command,
            "version": __version__,
            "config": {},
            "wall_ms": round((time.monotonic() - started) * 1000, 3),
            "error": {"code": exc.code, "message": exc.message},
        }
        _emit(envelope, ns.format, stdout)
        stderr.write(f"ccl: {exc}\n")
        return EXIT_ERROR
    envelope = {
        "schema": SCHEMA_VERSION,
        "command": ns.command,
        "version": __version__,
        "config": config,
        "wall_ms": round((time.monotonic() - started) * 1000, 3),
        "result": result,
    }
    _emit(envelope, ns.format, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
