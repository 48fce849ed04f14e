"""Strict JSON run configurations.

Every physical and discretization parameter has exactly one key; unknown
keys are rejected so that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import json

import numpy as np

from .mesh import PATTERNS, build_structured_rect_mesh
from .nonlinearity import CutoffParams
from .stepper import SolverConfig


class ConfigError(ValueError):
    """Invalid or unparseable run configuration."""


def _require_keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _number(obj, key, where, lo=None, hi=None, lo_strict=False):
    try:
        val = float(obj[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected a number") from None
    if not np.isfinite(val):
        raise ConfigError(f"{where}.{key}: must be finite")
    if lo is not None and (val <= lo if lo_strict else val < lo):
        raise ConfigError(f"{where}.{key}: must be {'>' if lo_strict else '>='} {lo}")
    if hi is not None and val > hi:
        raise ConfigError(f"{where}.{key}: must be <= {hi}")
    return val


def _integer(obj, key, where, lo=1):
    val = obj[key]
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{where}.{key}: expected an integer")
    if val < lo:
        raise ConfigError(f"{where}.{key}: must be >= {lo}")
    return val


def parse_mesh_spec(spec, where="mesh"):
    _require_keys(spec, ("bounds", "nx", "ny"), ("pattern",), where)
    bounds = spec["bounds"]
    if (not isinstance(bounds, (list, tuple)) or len(bounds) != 4
            or not all(isinstance(b, (int, float)) for b in bounds)):
        raise ConfigError(f"{where}.bounds: expected [xmin, xmax, ymin, ymax]")
    pattern = spec.get("pattern", "right-diagonal")
    if pattern not in PATTERNS:
        raise ConfigError(f"{where}.pattern: must be one of {PATTERNS}")
    nx = _integer(spec, "nx", where)
    ny = _integer(spec, "ny", where)
    try:
        return build_structured_rect_mesh(bounds, nx, ny, pattern)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def make_initial_datum(spec, mesh, where="initial", total_mass=None):
    """Nodal interpolant of the initial density, normalized to unit mean
    (or to the given total mass, as the self-similar mode requires)."""
    from .assembly import assemble_lumped_mass, interpolate

    _require_keys(spec, ("kind",), ("sigma", "center"), where)
    kind = spec["kind"]
    if kind == "uniform":
        f = lambda x, y: np.ones_like(x)
    elif kind == "gaussian":
        sigma = _number(spec, "sigma", where, lo=0.0, lo_strict=True) if "sigma" in spec else 0.05
        center = spec.get("center", [0.0, 0.0])
        if (not isinstance(center, (list, tuple)) or len(center) != 2
                or not all(isinstance(c, (int, float)) for c in center)):
            raise ConfigError(f"{where}.center: expected [cx, cy]")
        cx, cy = float(center[0]), float(center[1])
        f = lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * np.pi * sigma))
    else:
        raise ConfigError(f"{where}.kind: unknown kind {kind!r}")
    field = interpolate(f, mesh)
    lumped = assemble_lumped_mass(mesh)
    mass = float(lumped @ field.values)
    if mass <= 0:
        raise ConfigError(f"{where}: initial datum has nonpositive mass")
    if total_mass is None:
        total_mass = mesh.domain_area  # unit mean
    scale = total_mass / mass
    return interpolate(lambda x, y: scale * f(x, y), mesh)


_RUN_REQUIRED = ("mesh", "s", "dt", "T", "delta", "L", "initial")
_RUN_OPTIONAL = ("epsilon", "picard_tol", "picard_max", "snapshot_every")
_SELFSIM_REQUIRED = ("mesh", "s", "dt", "T", "delta", "L", "epsilon", "initial")
_SELFSIM_OPTIONAL = ("lambda", "picard_tol", "picard_max", "snapshot_every")


def parse_run_config(doc, mode="standard"):
    """Validate a run/selfsim JSON document into (mesh, SolverConfig, rho0)."""
    required = _SELFSIM_REQUIRED if mode == "selfsimilar" else _RUN_REQUIRED
    optional = _SELFSIM_OPTIONAL if mode == "selfsimilar" else _RUN_OPTIONAL
    _require_keys(doc, required, optional, "config")
    mesh = parse_mesh_spec(doc["mesh"])
    s = _number(doc, "s", "config", lo=0.0, hi=1.0, lo_strict=True)
    if s >= 1.0:
        raise ConfigError("config.s: must be < 1")
    dt = _number(doc, "dt", "config", lo=0.0, lo_strict=True)
    T = _number(doc, "T", "config", lo=dt)
    delta = _number(doc, "delta", "config", lo=0.0, hi=1.0, lo_strict=True)
    if delta >= 1.0:
        raise ConfigError("config.delta: must be < 1")
    L = _number(doc, "L", "config", lo=1.0, lo_strict=True)
    epsilon = _number(doc, "epsilon", "config", lo=0.0, lo_strict=True) \
        if "epsilon" in doc else 1.0
    lam = None
    if mode == "selfsimilar" and "lambda" in doc:
        lam = _number(doc, "lambda", "config")
    kwargs = {}
    if "picard_tol" in doc:
        kwargs["picard_tol"] = _number(doc, "picard_tol", "config", lo=0.0, lo_strict=True)
    if "picard_max" in doc:
        kwargs["picard_max"] = _integer(doc, "picard_max", "config")
    if "snapshot_every" in doc:
        kwargs["snapshot_every"] = _integer(doc, "snapshot_every", "config", lo=0)
    cfg = SolverConfig(s=s, dt=dt, T=T, cutoff=CutoffParams(delta, L),
                       epsilon=epsilon, mode=mode, lambda_drift=lam, **kwargs)
    # the self-similar steady state is mass specific: runs must carry the
    # profile's own total mass for the long-time state to match it
    total_mass = None
    if mode == "selfsimilar":
        from .diagnostics import profile_mass
        total_mass = profile_mass(s, 2)
    rho0 = make_initial_datum(doc["initial"], mesh, total_mass=total_mass)
    return mesh, cfg, rho0


_RHS_KINDS = ("cos_pi_x", "gaussian")


def parse_fracpoisson_config(doc):
    _require_keys(doc, ("mesh", "s", "rhs"), ("compare_analytic",), "config")
    mesh = parse_mesh_spec(doc["mesh"])
    s = _number(doc, "s", "config", lo=0.0, hi=1.0, lo_strict=True)
    if s >= 1.0:
        raise ConfigError("config.s: must be < 1")
    _require_keys(doc["rhs"], ("kind",), ("sigma",), "rhs")
    kind = doc["rhs"]["kind"]
    if kind not in _RHS_KINDS:
        raise ConfigError(f"rhs.kind: must be one of {_RHS_KINDS}")
    compare = doc.get("compare_analytic", False)
    if not isinstance(compare, bool):
        raise ConfigError("config.compare_analytic: expected a boolean")
    if compare and kind != "cos_pi_x":
        raise ConfigError("analytic comparison is available only for rhs.kind=cos_pi_x")
    sigma = None
    if kind == "gaussian":
        sigma = _number(doc["rhs"], "sigma", "rhs", lo=0.0, lo_strict=True) \
            if "sigma" in doc["rhs"] else 0.05
    return mesh, s, kind, sigma, compare


def parse_eig_config(doc):
    _require_keys(doc, ("mesh",), ("count", "dump_vectors"), "config")
    mesh = parse_mesh_spec(doc["mesh"])
    count = _integer(doc, "count", "config") if "count" in doc else None
    dump_vectors = doc.get("dump_vectors", False)
    if not isinstance(dump_vectors, bool):
        raise ConfigError("config.dump_vectors: expected a boolean")
    return mesh, count, dump_vectors


def parse_sweep_config(doc):
    """Grid sweep over mesh resolutions and time steps, vs the finest reference."""
    _require_keys(doc, ("bounds", "nx_levels", "dt_levels", "s", "T", "delta", "L",
                        "initial"),
                  ("pattern", "epsilon", "picard_tol", "picard_max"), "config")
    for key in ("nx_levels", "dt_levels"):
        levels = doc[key]
        if (not isinstance(levels, list) or not levels
                or not all(isinstance(v, (int, float)) and v > 0 for v in levels)):
            raise ConfigError(f"config.{key}: expected a nonempty list of positive numbers")
    nx_levels = sorted({int(v) for v in doc["nx_levels"]})
    dt_levels = sorted({float(v) for v in doc["dt_levels"]}, reverse=True)
    s = _number(doc, "s", "config", lo=0.0, hi=1.0, lo_strict=True)
    if s >= 1.0:
        raise ConfigError("config.s: must be < 1")
    T = _number(doc, "T", "config", lo=max(dt_levels))
    delta = _number(doc, "delta", "config", lo=0.0, hi=1.0, lo_strict=True)
    if delta >= 1.0:
        raise ConfigError("config.delta: must be < 1")
    L = _number(doc, "L", "config", lo=1.0, lo_strict=True)
    params = {"s": s, "T": T, "cutoff": CutoffParams(delta, L)}
    if "epsilon" in doc:
        params["epsilon"] = _number(doc, "epsilon", "config", lo=0.0, lo_strict=True)
    if "picard_tol" in doc:
        params["picard_tol"] = _number(doc, "picard_tol", "config", lo=0.0, lo_strict=True)
    if "picard_max" in doc:
        params["picard_max"] = _integer(doc, "picard_max", "config")
    pattern = doc.get("pattern", "right-diagonal")
    if pattern not in PATTERNS:
        raise ConfigError(f"config.pattern: must be one of {PATTERNS}")
    bounds = doc["bounds"]
    if (not isinstance(bounds, (list, tuple)) or len(bounds) != 4
            or not all(isinstance(b, (int, float)) for b in bounds)):
        raise ConfigError("config.bounds: expected [xmin, xmax, ymin, ymax]")
    return bounds, pattern, nx_levels, dt_levels, params, doc["initial"]


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
