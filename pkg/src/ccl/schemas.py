"""JSON Schemas (draft 2020-12) for the CLI envelopes, one per command.

Kept as plain dicts so the package has no runtime dependency on a
validator; the test suite checks every command's output against them.
"""

from __future__ import annotations

SCHEMA_VERSION = 1

_value = {"type": ["integer", "string", "boolean", "null"]}
_port_map = {"type": "object", "additionalProperties": _value}
_sym_value = {
    "type": "object",
    "required": ["value", "symbolic"],
    "properties": {"value": _value, "symbolic": {"type": "string"}},
}
_nat = {"type": "integer", "minimum": 0}

_stats = {
    "type": "object",
    "required": ["solver_calls", "paths_explored", "paths_skipped_timeout", "paths_unsat", "paths_aborted"],
    "properties": {k: _nat for k in ("solver_calls", "paths_explored", "paths_skipped_timeout", "paths_unsat", "paths_aborted")},
}

_controller_config = {
    "type": "object",
    "required": ["controller", "input_length", "max_visits", "iterations", "seed", "solver_timeout_ms", "split_domain", "domain"],
    "properties": {
        "controller": {"type": "string"},
        "input_length": {"type": "integer", "minimum": 1},
        "max_visits": {"type": "integer", "minimum": 1},
        "iterations": _nat,
        "seed": {"type": "integer"},
        "solver_timeout_ms": {"type": ["integer", "null"]},
        "split_domain": {"type": "boolean"},
        "domain": {"type": ["object", "null"], "additionalProperties": {"type": "array", "items": _value}},
    },
}

_trace = {
    "type": "object",
    "required": ["ticks", "oracle", "outputs"],
    "properties": {
        "oracle": {"type": "array", "items": _nat},
        "outputs": {"type": "array", "items": _port_map},
        "ticks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["tick", "inputs", "outputs", "branches", "decisions", "fired", "state"],
                "properties": {
                    "tick": {"type": "integer", "minimum": 1},
                    "inputs": _port_map,
                    "outputs": {"type": "object", "additionalProperties": _sym_value},
                    "branches": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["instance", "transition", "tick", "cond", "taken"],
                            "properties": {"cond": {"type": "string"}, "taken": {"type": "boolean"}},
                        },
                    },
                    "decisions": {"type": "array"},
                    "fired": {"type": "array"},
                    "state": {"type": "object"},
                },
            },
        },
    },
}

_interesting = {
    "type": "object",
    "required": ["inputs", "outputs", "outputs_symbolic", "path_condition", "oracle"],
    "properties": {
        "inputs": {"type": "array", "items": _port_map},
        "outputs": {"type": "array", "items": _port_map},
        "outputs_symbolic": {"type": "array", "items": {"type": "object", "additionalProperties": {"type": "string"}}},
        "path_condition": {
            "type": "array",
            "items": {"type": "object", "required": ["branch", "cond"]},
        },
        "oracle": {"type": "array", "items": _nat},
    },
}

_exploration = {
    "type": "object",
    "required": ["interesting", "stats"],
    "properties": {
        "interesting": {"type": "array", "items": _interesting},
        "stats": _stats,
        "budget_exceeded": {"type": "string"},
    },
}

_ratio_block = {
    "type": "object",
    "required": ["visited", "total", "ratio"],
    "properties": {"visited": _nat, "total": _nat, "ratio": {"type": "number", "minimum": 0, "maximum": 1}},
}

_metrics = {
    "type": "object",
    "required": ["minimality", "coverage", "redundancy", "nondet", "stats"],
    "properties": {
        "minimality": {
            "type": ["object", "null"],
            "required": ["duplicate_ratio", "duplicate_groups", "total"],
            "properties": {"duplicate_ratio": {"type": "number", "minimum": 0, "maximum": 1}},
        },
        "coverage": {
            "type": "object",
            "required": ["transitions", "states"],
            "properties": {"transitions": _ratio_block, "states": _ratio_block},
        },
        "redundancy": {"type": "array", "items": {"type": "object", "required": ["pair", "condition", "outputs"]}},
        "nondet": {
            "type": "object",
            "required": ["mode", "exists"],
            "properties": {"mode": {"enum": ["full", "exists"]}, "exists": {"type": "boolean"}},
        },
        "stats": _stats,
    },
}

_diff = {
    "type": "object",
    "required": ["input_length", "witness_count", "witness_input_count", "witnesses", "unknown", "stats"],
    "properties": {
        "input_length": {"type": "integer", "minimum": 1},
        "witness_count": _nat,
        "witness_input_count": _nat,
        "witnesses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["inputs", "out_m1", "out_m1_symbolic", "m2_outputs_checked"],
                "properties": {"m2_outputs_checked": {"type": "integer", "minimum": 1}},
            },
        },
        "unknown": {"type": "array", "items": {"type": "object", "required": ["inputs", "reason"]}},
        "stats": {"type": "object", "required": ["dse_result_size", "oracle_sweeps", "wall_ms", "solver_calls"]},
    },
}

_brute = {
    "oneOf": [
        {
            "type": "object",
            "required": ["runs", "path_classes", "classes"],
            "properties": {"runs": _nat, "path_classes": _nat, "classes": {"type": "array"}},
        },
        {
            "type": "object",
            "required": ["witness_count", "inputs_checked", "runs", "witnesses"],
            "properties": {"witness_count": _nat, "inputs_checked": _nat, "runs": _nat},
        },
    ]
}

_sweep_row = {
    "type": "object",
    "required": ["timeout_ms", "time_improvement", "result_deterioration", "median_ms", "interesting", "paths_skipped_timeout"],
    "properties": {
        "timeout_ms": {"type": "integer", "minimum": 1},
        "time_improvement": {"type": "number", "maximum": 1},
        "result_deterioration": {"type": "number", "maximum": 1},
        "median_ms": {"type": "number", "minimum": 0},
        "interesting": _nat,
        "paths_skipped_timeout": _nat,
    },
}

_sweep = {
    "type": "object",
    "required": ["baseline", "rows"],
    "properties": {
        "baseline": {"type": "object", "required": ["median_ms", "interesting"]},
        "rows": {"type": "array", "items": _sweep_row},
    },
}

_validate = {
    "type": "object",
    "required": ["valid", "diagnostics"],
    "properties": {
        "valid": {"type": "boolean"},
        "diagnostics": {"type": "array", "items": {"type": "object", "required": ["code", "message"]}},
    },
}

RESULT_SCHEMAS = {
    "validate": _validate,
    "run": _trace,
    "dse": _exploration,
    "metrics": _metrics,
    "semdiff": _diff,
    "brute": _brute,
    "sweep": _sweep,
}

_CONFIGS = {"dse": _controller_config, "metrics": _controller_config, "semdiff": _controller_config, "sweep": _controller_config}

ERROR_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "command", "version", "error"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {"code": {"type": "string"}, "message": {"type": "string"}},
        },
    },
}


def envelope_schema(command: str) -> dict:
    """Schema of a successful ``ccl <command>`` envelope."""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": ["schema", "command", "version", "config", "wall_ms", "result"],
        "properties": {
            "schema": {"const": SCHEMA_VERSION},
            "command": {"const": command},
            "version": {"type": "string"},
            "config": _CONFIGS.get(command, {"type": "object"}),
            "wall_ms": {"type": "number", "minimum": 0},
            "result": RESULT_SCHEMAS[command],
        },
    }
