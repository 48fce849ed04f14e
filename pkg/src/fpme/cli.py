"""Command line entry point: configured runs, parameter sweeps, and CSV output.

Subcommands (each reads one JSON config file and writes into ``--out``):

* ``run``         standard-mode time integration
* ``selfsim``     self-similar-variables mode with confining drift
* ``fracpoisson`` single fractional Poisson solve, optional analytic error
* ``eig``         eigendecomposition dump and smallest-eigenvalue report
* ``sweep``       (mesh, time step) grid vs the finest reference solution

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .assembly import (NodalField, assemble_consistent_mass, assemble_lumped_mass,
                       assemble_stiffness, evaluate, interpolate)
from .config import (ConfigError, load_json, parse_eig_config,
                     parse_fracpoisson_config, parse_run_config, parse_sweep_config)
from .diagnostics import DIAG_COLUMNS, profile_distance
from .mesh import build_structured_rect_mesh, export_csv
from .spectral import (compute_eigendecomposition, dump_eigenpairs,
                       solve_fractional_poisson)
from .stepper import build_operators, run as run_scheme

SNAPSHOT_COLUMNS = ("node", "x", "y", "rho", "c")


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_diagnostics(records, path):
    """``diag.csv`` with the documented header, full round-trip float precision."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DIAG_COLUMNS)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.as_row()])
    return path


def write_snapshot(rho, c, step, mesh, directory):
    """``snap_{step:06d}.csv`` with one row per vertex in node order."""
    path = os.path.join(directory, f"snap_{step:06d}.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SNAPSHOT_COLUMNS)
        for i in range(mesh.num_vertices):
            w.writerow([i, repr(float(mesh.vertices[i, 0])),
                        repr(float(mesh.vertices[i, 1])),
                        repr(float(rho.values[i])), repr(float(c.values[i]))])
    return path


def read_snapshot(path, mesh):
    """Inverse of :func:`write_snapshot`; bit-exact round trip."""
    rho = np.empty(mesh.num_vertices)
    c = np.empty(mesh.num_vertices)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != SNAPSHOT_COLUMNS:
            raise ValueError(f"unexpected snapshot header {header}")
        for row in reader:
            i = int(row[0])
            rho[i] = float(row[3])
            c[i] = float(row[4])
    return NodalField(rho, mesh), NodalField(c, mesh)


def write_manifest(out_dir, payload):
    """Atomically written ``manifest.json`` describing one finished run."""
    path = os.path.join(out_dir, "manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)
    return path


def _mesh_summary(mesh):
    return {"num_vertices": mesh.num_vertices,
            "num_triangles": mesh.num_triangles,
            "h": mesh.h}


def _cmd_run(doc, out_dir, mode):
    started = time.perf_counter()
    mesh, cfg, rho0 = parse_run_config(doc, mode=mode)
    result = run_scheme(cfg, rho0, mesh)
    diag_path = write_diagnostics(result.records, os.path.join(out_dir, "diag.csv"))
    snap_paths = []
    for step, rho, c in result.snapshots:
        snap_paths.append(write_snapshot(rho, c, step, mesh, out_dir))
    extra = {}
    if mode == "selfsimilar":
        ppath = os.path.join(out_dir, "profile.csv")
        lumped = result.operators.lumped
        with open(ppath, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "time", "profile_l1", "profile_l2"])
            for step, rho, _ in result.snapshots:
                l1 = profile_distance(rho, cfg.s, 2, mesh, "L1", lumped)
                l2 = profile_distance(rho, cfg.s, 2, mesh, "L2", lumped)
                w.writerow([step, repr(step * cfg.dt), repr(l1), repr(l2)])
        extra["profile_csv"] = os.path.basename(ppath)
    write_manifest(out_dir, {
        "subcommand": "selfsim" if mode == "selfsimilar" else "run",
        "version": __version__,
        "config": doc,
        "mesh": _mesh_summary(mesh),
        "wall_clock_seconds": time.perf_counter() - started,
        "diagnostics_csv": os.path.basename(diag_path),
        "snapshots": [os.path.basename(p) for p in snap_paths],
        **extra,
    })
    return 0


def _cmd_fracpoisson(doc, out_dir):
    started = time.perf_counter()
    mesh, s, kind, sigma, compare = parse_fracpoisson_config(doc)
    lumped = assemble_lumped_mass(mesh)
    consistent = assemble_consistent_mass(mesh)
    stiffness = assemble_stiffness(mesh)
    decomp = compute_eigendecomposition(stiffness, consistent, mesh)
    if kind == "cos_pi_x":
        f = interpolate(lambda x, y: np.cos(np.pi * x), mesh)
    else:
        f = interpolate(lambda x, y: np.exp(-(x**2 + y**2) / (2 * np.pi * sigma)), mesh)
    c = solve_fractional_poisson(decomp, consistent, f, s, lumped)
    path = os.path.join(out_dir, "potential.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "x", "y", "f", "c"])
        for i in range(mesh.num_vertices):
            w.writerow([i, repr(float(mesh.vertices[i, 0])),
                        repr(float(mesh.vertices[i, 1])),
                        repr(float(f.values[i])), repr(float(c.values[i]))])
    extra = {}
    if compare:
        exact = interpolate(lambda x, y: -np.pi ** (-2 * s) * np.cos(np.pi * x), mesh)
        diff = c.values - exact.values
        extra["l2_error"] = float(np.sqrt(diff @ (consistent @ diff)))
    write_manifest(out_dir, {
        "subcommand": "fracpoisson",
        "version": __version__,
        "config": doc,
        "mesh": _mesh_summary(mesh),
        "wall_clock_seconds": time.perf_counter() - started,
        "potential_csv": os.path.basename(path),
        **extra,
    })
    return 0


def _cmd_eig(doc, out_dir):
    started = time.perf_counter()
    mesh, count, dump_vectors = parse_eig_config(doc)
    consistent = assemble_consistent_mass(mesh)
    stiffness = assemble_stiffness(mesh)
    decomp = compute_eigendecomposition(stiffness, consistent, mesh)
    if count is not None:
        from dataclasses import replace
        decomp = replace(decomp, eigenvalues=decomp.eigenvalues[:count],
                         eigenvectors=decomp.eigenvectors[:, :count])
    paths = dump_eigenpairs(decomp, out_dir, vectors=dump_vectors)
    export_csv(mesh, out_dir)
    lam1 = float(decomp.eigenvalues[0])
    print(f"lambda_1 = {lam1!r}")
    write_manifest(out_dir, {
        "subcommand": "eig",
        "version": __version__,
        "config": doc,
        "mesh": _mesh_summary(mesh),
        "wall_clock_seconds": time.perf_counter() - started,
        "lambda_1": lam1,
        "files": [os.path.basename(p) for p in paths],
    })
    return 0


def run_sweep(bounds, pattern, nx_levels, dt_levels, params, initial, out_dir=None):
    """Run the full (nx, dt) grid and measure distances to the finest cell.

    The structured levels are nested, so coarse solutions are evaluated
    exactly at the reference mesh nodes; the reported error is the L2
    norm of the nodal difference under the reference consistent mass.
    Returns result rows (nx, h, dt, error), the reference cell excluded.
    """
    from .config import make_initial_datum
    from .stepper import SolverConfig

    finest_nx = nx_levels[-1]
    finest_dt = dt_levels[-1]
    finals = {}
    meshes = {}
    for nx in nx_levels:
        mesh = build_structured_rect_mesh(bounds, nx, nx, pattern)
        meshes[nx] = mesh
        rho0 = make_initial_datum(initial, mesh)
        decomp = frac_op = None
        for dt in dt_levels:
            cfg = SolverConfig(dt=dt, **params)
            ops = build_operators(mesh, cfg, decomp=decomp, frac_op=frac_op)
            decomp, frac_op = ops.decomp, ops.frac_op
            result = run_scheme(cfg, rho0, mesh, ops=ops)
            finals[(nx, dt)] = result.rho_final
    ref_mesh = meshes[finest_nx]
    ref_field = finals[(finest_nx, finest_dt)]
    ref_M = assemble_consistent_mass(ref_mesh)
    rows = []
    for (nx, dt), field in sorted(finals.items()):
        if (nx, dt) == (finest_nx, finest_dt):
            continue
        coarse_at_ref = evaluate(field, ref_mesh.vertices)
        diff = coarse_at_ref - ref_field.values
        err = float(np.sqrt(diff @ (ref_M @ diff)))
        rows.append((nx, meshes[nx].h, dt, err))
    if out_dir is not None:
        path = os.path.join(out_dir, "errors.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["nx", "h", "dt", "l2_error"])
            for nx, h, dt, err in rows:
                w.writerow([nx, repr(h), repr(dt), repr(err)])
    return rows


def _cmd_sweep(doc, out_dir):
    started = time.perf_counter()
    bounds, pattern, nx_levels, dt_levels, params, initial = parse_sweep_config(doc)
    rows = run_sweep(bounds, pattern, nx_levels, dt_levels, params, initial, out_dir)
    write_manifest(out_dir, {
        "subcommand": "sweep",
        "version": __version__,
        "config": doc,
        "wall_clock_seconds": time.perf_counter() - started,
        "errors_csv": "errors.csv",
        "cells": len(rows),
    })
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fpme", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "selfsim", "fracpoisson", "eig", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        doc = load_json(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "run":
            return _cmd_run(doc, args.out, mode="standard")
        if args.command == "selfsim":
            return _cmd_run(doc, args.out, mode="selfsimilar")
        if args.command == "fracpoisson":
            return _cmd_fracpoisson(doc, args.out)
        if args.command == "eig":
            return _cmd_eig(doc, args.out)
        return _cmd_sweep(doc, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver-level failure
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
