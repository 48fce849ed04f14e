"""Eigendecomposition of the discrete Neumann Laplacian on the zero-mean
subspace, fractional powers of it, and the fractional Poisson solve.

The fractional operator is defined through the complete set of generalized
eigenpairs of (K, M); a dense symmetric solver is the backend, so mesh sizes
are guarded.  Inputs and outputs of every operator application are projected
onto the zero-mean subspace so that roundoff never reintroduces the constant
mode.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import NodalField, assemble_lumped_mass, lumped_mean

#: Hard guard on the number of vertices for the dense eigensolver.
DENSE_EIGEN_GUARD = 20_000

#: Computed eigenvalues below this are treated as the (discarded) zero mode;
#: anything more negative is an assembly/solver failure.
NEGATIVE_EIG_TOL = -1e-10

#: Acceptable relative deviation of a field's mean from zero when a
#: zero-mean input is required.
MEAN_ZERO_RTOL = 1e-12


class ZeroMeanField(NodalField):
    """A nodal field whose exact integral over the domain vanishes."""


@dataclass(frozen=True)
class SpectralDecomposition:
    """Positive generalized eigenpairs K v = lambda M v on the zero-mean subspace.

    ``eigenvectors`` columns are M-orthonormal, mean-zero, sorted by
    ascending eigenvalue, with a deterministic sign (the first nonzero
    component of each vector is positive).
    """

    eigenvalues: np.ndarray  # (N-1,), all positive
    eigenvectors: np.ndarray  # (N, N-1)
    mesh: object

    @property
    def lambda_1(self):
        return float(self.eigenvalues[0])


def project_zero_mean(field, lumped=None):
    """Subtract the exact mean, computed with the lumped-mass inner product."""
    mesh = field.mesh
    if lumped is None:
        lumped = assemble_lumped_mass(mesh)
    mean = lumped_mean(field.values, lumped, mesh.domain_area)
    return ZeroMeanField(field.values - mean, mesh)


def compute_eigendecomposition(K, M, mesh, guard=DENSE_EIGEN_GUARD):
    """All positive generalized eigenpairs of the pencil (K, M).

    The constant mode (eigenvalue nearest zero) is discarded; a computed
    eigenvalue below ``NEGATIVE_EIG_TOL`` or a solver failure raises.
    """
    n = mesh.num_vertices
    if n > guard:
        raise ValueError(
            f"mesh has {n} vertices; dense eigendecomposition guarded at {guard}")
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    try:
        w, v = sla.eigh(Kd, Md)
    except sla.LinAlgError as exc:  # pragma: no cover - solver backend failure
        raise RuntimeError(f"generalized eigensolver failed: {exc}") from exc
    if w[0] < NEGATIVE_EIG_TOL:
        raise RuntimeError(f"negative eigenvalue {w[0]!r} beyond tolerance")
    # eigh returns ascending eigenvalues; index 0 is the constant mode
    w, v = w[1:].copy(), v[:, 1:].copy()
    if w[0] <= 0:
        raise RuntimeError(f"nonpositive first positive eigenvalue {w[0]!r}")
    # deterministic sign: first nonzero component of each eigenvector positive
    nonzero = np.abs(v) > 1e-12 * np.max(np.abs(v), axis=0)
    lead = nonzero.argmax(axis=0)
    signs = np.sign(v[lead, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v *= signs
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v, mesh=mesh)


def _coefficients(decomp, M, values):
    """Eigenbasis coefficients (u, phi_k) in the consistent-mass inner product."""
    return decomp.eigenvectors.T @ (M @ values)


def _require_zero_mean(u, lumped):
    mean = lumped_mean(u.values, lumped, u.mesh.domain_area)
    scale = np.max(np.abs(u.values), initial=0.0)
    if abs(mean) > MEAN_ZERO_RTOL * max(scale, 1.0):
        raise ValueError(f"field mean {mean!r} is not zero within tolerance")


def apply_fractional_power(decomp, M, u, s, lumped=None):
    """Apply the s-th power of the discrete Neumann Laplacian to a zero-mean field.

    s in [-1, 1]; s = -1 is the inverse Laplacian on the zero-mean subspace.
    """
    if not -1.0 <= s <= 1.0:
        raise ValueError(f"fractional power s={s} outside [-1, 1]")
    if lumped is None:
        lumped = assemble_lumped_mass(u.mesh)
    _require_zero_mean(u, lumped)
    coeff = _coefficients(decomp, M, u.values)
    out = decomp.eigenvectors @ (decomp.eigenvalues ** s * coeff)
    # deflation: keep roundoff from feeding the constant mode back in
    out -= lumped @ out / u.mesh.domain_area
    return ZeroMeanField(out, u.mesh)


def solve_fractional_poisson(decomp, M, rho, s, lumped=None):
    """Potential c with -(-Lap_h)^s c = (rho)^*; c has zero mean."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} outside (0, 1)")
    if lumped is None:
        lumped = assemble_lumped_mass(rho.mesh)
    star = project_zero_mean(rho, lumped)
    c = apply_fractional_power(decomp, M, star, -s, lumped)
    return NodalField(-c.values, rho.mesh)


def discrete_sobolev_norms(decomp, M, u, s, lumped=None):
    """Spectrally weighted norms (sum lambda^{+-s} u_k^2)^(1/2) of a zero-mean field."""
    if lumped is None:
        lumped = assemble_lumped_mass(u.mesh)
    _require_zero_mean(u, lumped)
    coeff = _coefficients(decomp, M, u.values)
    hs = float(np.sqrt(np.sum(decomp.eigenvalues ** s * coeff**2)))
    hminus = float(np.sqrt(np.sum(decomp.eigenvalues ** (-s) * coeff**2)))
    return {"Hs_norm": hs, "Hminus_s_norm": hminus}


def fractional_inverse_operator(decomp, M, s, lumped, domain_area):
    """Dense matrix k sending rho to the potential c = k @ rho (zero-mean output).

    Precomputing this collapses projection + eigen transform + back
    transform into a single matvec; used by the time stepper, where the
    solve is called once per Picard sweep.
    """
    V = decomp.eigenvectors
    scaled = V * decomp.eigenvalues ** (-s)
    op = -(scaled @ (M @ V).T)
    # compose with mean subtraction on input and output (roundoff hygiene;
    # the eigenvectors are already mean-free in exact arithmetic)
    w = np.asarray(lumped) / domain_area
    ones = np.ones(len(w))
    op -= np.outer(op @ ones, w)
    op -= np.outer(ones, w @ op)
    return op


def dump_eigenpairs(decomp, directory, vectors=False):
    """Write ``eigenvalues.csv`` (k, lambda); optionally one CSV per eigenvector."""
    import os

    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "eigenvalues.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["k", "lambda"])
        for k, lam in enumerate(decomp.eigenvalues, start=1):
            w.writerow([k, repr(float(lam))])
    paths = [path]
    if vectors:
        vpath = os.path.join(directory, "eigenvectors.csv")
        with open(vpath, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["node"] + [f"v{k}" for k in range(1, decomp.eigenvectors.shape[1] + 1)])
            for i, row in enumerate(decomp.eigenvectors):
                w.writerow([i] + [repr(float(x)) for x in row])
        paths.append(vpath)
    return paths
