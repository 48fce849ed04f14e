import csv
import os

import numpy as np
import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

DIAG_COLUMNS = (
    "step", "time", "mass", "linf", "min_val", "neg_measure", "entropy_reg",
    "entropy", "energy", "grad_product", "hs_norm_c", "picard_iters",
    "picard_residual",
)


@pytest.fixture(scope="session")
def gaussian_diag_csv():
    return os.path.join(DATA_DIR, "diag_gaussian_run.csv")


@pytest.fixture(scope="session")
def gaussian_snapshot_csv():
    return os.path.join(DATA_DIR, "snap_gaussian_final.csv")


@pytest.fixture
def synthetic_diag_csv(tmp_path):
    """diag.csv whose entropy and energy columns decay exactly like e^{-3t}."""
    path = tmp_path / "diag_synthetic.csv"
    t = np.linspace(0, 2, 41)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DIAG_COLUMNS)
        for i, ti in enumerate(t):
            val = float(np.exp(-3.0 * ti))
            w.writerow([i, repr(float(ti)), 1.0, 2.0, 0.0, 0.0, repr(val),
                        repr(val), repr(val), -1e-12, 0.1, 3, 1e-11])
    return str(path)


def write_errors_csv(path, power):
    """Synthetic sweep table with error = h^power per dt curve (+ dt family).

    The dt family at the finest mesh uses time steps disjoint from the
    h-family curves so that the two groupings never share an axis group.
    """
    hs = [2.0**-n for n in (2, 3, 4, 5)]
    dts = [2.0**-k for k in (6, 7)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["nx", "h", "dt", "l2_error"])
        for dt in dts:
            for h in hs:
                w.writerow([int(round(1 / h)), repr(h), repr(dt),
                            repr(h**power * (1 + 0.5 * dt))])
        for dt in (2.0**-8, 2.0**-9, 2.0**-10):
            w.writerow([64, repr(2.0**-6), repr(dt), repr(dt * 0.3)])
    return str(path)


@pytest.fixture
def quadratic_errors_csv(tmp_path):
    return write_errors_csv(tmp_path / "errors_h2.csv", 2.0)


@pytest.fixture
def linear_errors_csv(tmp_path):
    return write_errors_csv(tmp_path / "errors_h1.csv", 1.0)
