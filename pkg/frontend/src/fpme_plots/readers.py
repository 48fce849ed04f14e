"""Schema-validated readers for the solver's CSV files.

A header mismatch raises immediately and names the offending column, so a
silently reordered or renamed file can never produce a plausible figure.
"""

from __future__ import annotations

import csv

import numpy as np

SNAPSHOT_COLUMNS = ("node", "x", "y", "rho", "c")

DIAG_COLUMNS = (
    "step", "time", "mass", "linf", "min_val", "neg_measure", "entropy_reg",
    "entropy", "energy", "grad_product", "hs_norm_c", "picard_iters",
    "picard_residual",
)

ERRORS_COLUMNS = ("nx", "h", "dt", "l2_error")


class SchemaError(ValueError):
    """CSV header does not match the documented schema."""


def _check_header(header, expected, path):
    header = tuple(h.strip() for h in header)
    if header != tuple(expected):
        for got, want in zip(header, expected):
            if got != want:
                raise SchemaError(
                    f"{path}: expected column {want!r}, found {got!r}")
        raise SchemaError(
            f"{path}: expected columns {expected}, found {header}")


def _read_table(path, expected):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        _check_header(header, expected, path)
        rows = [row for row in reader if row]
    data = {}
    for j, name in enumerate(expected):
        try:
            data[name] = np.array([float(row[j]) for row in rows])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: column {name!r} failed to parse: {exc}") from exc
    return data


def read_snapshot(path):
    """Vertex table (node, x, y, rho, c) of one density/potential snapshot."""
    return _read_table(path, SNAPSHOT_COLUMNS)


def read_diagnostics(path):
    """Per-step diagnostics table of one run."""
    return _read_table(path, DIAG_COLUMNS)


def read_errors(path):
    """Sweep error table (nx, h, dt, l2_error) against the finest reference."""
    return _read_table(path, ERRORS_COLUMNS)
