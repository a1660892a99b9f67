"""Run-file schema: parsing, strict validation, and problem construction.

Run files are TOML with a frozen schema version.  Unknown keys anywhere are
rejected, so typos fail loudly instead of silently using defaults.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .assembly import DiscreteProblem
from .bracket_check import check_lower, check_upper, standard_bracket
from .expressions import ExpressionError, parse_expression
from .extremal import Bracket, IterationError
from .graphs import GraphError, PiecewiseMonotone
from .meshing import MeshError, build_mesh
from .nonlinearity import Decomposition, DecompositionError
from .operators import OperatorError, plaplacian
from .vi import Tolerances

__all__ = ["ConfigError", "SCHEMA_VERSION", "load_config", "RunSetup",
           "setup_from_config"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


_NUM = (int, float)

# key -> (allowed types, required)
_SCHEMA = {
    "schema_version": {"__self__": (int, True)},
    "seed": {"__self__": (int, False)},
    "direction": {"__self__": (str, False)},
    "threads": {"__self__": (int, False)},
    "mesh": {
        "dimension": (int, False),
        "x0": (_NUM, False), "x1": (_NUM, False),
        "y0": (_NUM, False), "y1": (_NUM, False),
        "n": (int, False), "nx": (int, False), "ny": (int, False),
    },
    "operator": {
        "kind": (str, True),
        "p": (_NUM, True),
        "weight": (str, False),
        "weight_min": (_NUM, False),
        "weight_max": (_NUM, False),
    },
    "nonlinearity": {
        "g_side": (str, False),
        "g": {
            "breakpoints": (list, False), "slopes": (list, False),
            "jumps": (list, False), "anchor": (_NUM, False),
        },
        "h": {
            "breakpoints": (list, False), "slopes": (list, False),
            "jumps": (list, False), "anchor": (_NUM, False),
        },
    },
    "bracket": {
        "mode": (str, True),
        "c_upper": (_NUM, False),
        "upper_u": (str, False), "upper_v": (str, False),
        "lower_u": (str, False), "lower_v": (str, False),
        "upper_u_file": (str, False), "upper_v_file": (str, False),
        "lower_u_file": (str, False), "lower_v_file": (str, False),
    },
    "tolerances": {
        "outer": (_NUM, False),
        "stat": (_NUM, False),
        "mono": (_NUM, False),
        "member": (_NUM, False),
        "max_outer": (int, False),
        "max_inner": (int, False),
    },
    "probe": {
        "candidates": (int, False),
        "tol": (_NUM, False),
    },
    "output": {
        "dir": (str, False),
        "inner_traces": (bool, False),
    },
}


def _type_ok(value, types):
    allowed = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool):
        return bool in allowed
    return isinstance(value, types)


def _validate_block(block, schema, path):
    if not isinstance(block, dict):
        raise ConfigError(f"{path} must be a table")
    for key, value in block.items():
        if key not in schema:
            raise ConfigError(f"unknown key {path}.{key}")
        rule = schema[key]
        if isinstance(rule, dict) and "__self__" not in rule:
            _validate_block(value, rule, f"{path}.{key}")
        else:
            types, _ = rule if not isinstance(rule, dict) else rule["__self__"]
            if not _type_ok(value, types):
                raise ConfigError(
                    f"{path}.{key} has wrong type {type(value).__name__}")
    for key, rule in schema.items():
        if key == "__self__":
            continue
        required = (rule[1] if not isinstance(rule, dict)
                    else rule.get("__self__", (None, False))[1])
        if required and key not in block:
            raise ConfigError(f"missing required key {path}.{key}")


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("run file must be a table")
    for key, value in cfg.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown top-level key {key}")
        rule = _SCHEMA[key]
        if "__self__" in rule:
            types, _ = rule["__self__"]
            if not _type_ok(value, types):
                raise ConfigError(f"{key} has wrong type {type(value).__name__}")
        else:
            _validate_block(value, rule, key)
    for key in ("mesh", "operator", "nonlinearity", "bracket"):
        if key not in cfg:
            raise ConfigError(f"missing required table [{key}]")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {cfg.get('schema_version')!r}; "
            f"this build expects {SCHEMA_VERSION}")
    direction = cfg.get("direction", "maximal")
    if direction not in ("maximal", "minimal", "both"):
        raise ConfigError(f"direction must be maximal|minimal|both, got {direction!r}")
    if cfg.get("probe", {}).get("candidates", 0) > 0 and direction != "both":
        raise ConfigError(
            "probe.candidates needs both extremal outputs; set direction = 'both'")
    return cfg


def load_config(path):
    with open(path, "rb") as f:
        cfg = tomllib.load(f)
    return validate_config(cfg)


def _piecewise_from(block, default_anchor=0.0):
    block = block or {}
    jumps = [(float(a), float(b)) for a, b in block.get("jumps", [])]
    return PiecewiseMonotone(
        breakpoints=block.get("breakpoints", ()),
        slopes=block.get("slopes", (0.0,)),
        jumps=jumps,
        anchor=block.get("anchor", default_anchor))


def _field_from(spec_text, mesh, name):
    try:
        fn = parse_expression(spec_text)
        return np.asarray(fn(mesh.coords), dtype=float)
    except ExpressionError as e:
        raise ConfigError(f"bad expression for bracket.{name}: {e}") from e


def _field_from_file(path, mesh, name):
    vals = np.loadtxt(path, dtype=float, ndmin=1)
    if vals.shape != (mesh.n_nodes,):
        raise ConfigError(
            f"bracket.{name} file {path} has {vals.size} values, mesh has "
            f"{mesh.n_nodes} nodes")
    return vals


@dataclass
class RunSetup:
    problem: DiscreteProblem
    bracket: Bracket
    tolerances: Tolerances
    directions: tuple
    probe_candidates: int
    probe_tol: float
    seed: int
    output_dir: str
    inner_traces: bool
    threads: int
    config: dict


def setup_from_config(cfg, seed_override=None, output_override=None,
                      threads_override=None):
    """Build all run objects from a validated config mapping."""
    try:
        mesh = build_mesh(cfg["mesh"])
    except (MeshError, KeyError) as e:
        raise ConfigError(f"bad mesh block: {e}") from e

    op_cfg = cfg["operator"]
    kind = op_cfg["kind"]
    try:
        if kind == "p_laplacian":
            op = plaplacian(op_cfg["p"])
        elif kind == "weighted_p_laplacian":
            for need in ("weight", "weight_min", "weight_max"):
                if need not in op_cfg:
                    raise ConfigError(f"weighted_p_laplacian needs operator.{need}")
            wfn = parse_expression(op_cfg["weight"])
            op = plaplacian(op_cfg["p"], weight=wfn,
                            weight_bounds=(op_cfg["weight_min"], op_cfg["weight_max"]))
        else:
            raise ConfigError(f"unknown operator kind {kind!r}")
    except (OperatorError, ExpressionError) as e:
        raise ConfigError(f"bad operator block: {e}") from e

    nl = cfg["nonlinearity"]
    try:
        dec = Decomposition(
            _piecewise_from(nl.get("g")), _piecewise_from(nl.get("h")),
            g_side=nl.get("g_side", "right"))
    except (GraphError, DecompositionError) as e:
        raise ConfigError(f"bad nonlinearity block: {e}") from e
    problem = DiscreteProblem(mesh, op, dec)

    tol_cfg = cfg.get("tolerances", {})
    tols = Tolerances.tied(
        mesh.dim, outer=tol_cfg.get("outer"),
        max_outer=tol_cfg.get("max_outer", 200),
        max_inner=tol_cfg.get("max_inner", 500_000))
    replace = {k: float(tol_cfg[k]) for k in ("stat", "mono", "member")
               if k in tol_cfg}
    if replace:
        tols = dataclasses.replace(tols, **replace)

    br = cfg["bracket"]
    mode = br["mode"]
    if mode == "helper":
        if "c_upper" not in br:
            raise ConfigError("bracket.mode='helper' needs bracket.c_upper")
        bracket = standard_bracket(problem, float(br["c_upper"]), tols=tols)
    elif mode in ("analytic", "explicit"):
        fields = {}
        for name in ("upper_u", "upper_v", "lower_u", "lower_v"):
            if mode == "analytic":
                if name not in br:
                    raise ConfigError(f"bracket.mode='analytic' needs bracket.{name}")
                fields[name] = _field_from(br[name], mesh, name)
            else:
                key = f"{name}_file"
                if key not in br:
                    raise ConfigError(f"bracket.mode='explicit' needs bracket.{key}")
                fields[name] = _field_from_file(br[key], mesh, name)
        up = check_upper(problem, fields["upper_u"], fields["upper_v"])
        low = check_lower(problem, fields["lower_u"], fields["lower_v"])
        try:
            bracket = Bracket(
                lower_u=fields["lower_u"], lower_v=fields["lower_v"],
                upper_u=fields["upper_u"], upper_v=fields["upper_v"],
                lower_report=low, upper_report=up,
                verified=up.passed and low.passed)
        except IterationError as e:
            raise ConfigError(f"bad bracket fields: {e}") from e
    else:
        raise ConfigError(f"unknown bracket mode {mode!r}")

    direction = cfg.get("direction", "maximal")
    directions = {"maximal": ("from_upper",), "minimal": ("from_lower",),
                  "both": ("from_upper", "from_lower")}[direction]
    probe = cfg.get("probe", {})
    seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
    out_block = cfg.get("output", {})
    out_dir = output_override or out_block.get("dir", "out")
    threads = int(threads_override if threads_override is not None
                  else cfg.get("threads", 1))
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    return RunSetup(
        problem=problem, bracket=bracket, tolerances=tols,
        directions=directions, probe_candidates=int(probe.get("candidates", 0)),
        probe_tol=float(probe.get("tol", 1e-6)), seed=seed,
        output_dir=out_dir, inner_traces=bool(out_block.get("inner_traces", False)),
        threads=threads, config=cfg)
