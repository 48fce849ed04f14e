"""Fully discrete scheme: smoothed initial datum, then implicit Euler steps
whose nonlinear stage equation is solved by Picard iteration with the
chain-rule matrix and the fractional potential lagged one sweep.

Each sweep is a single SPD solve with the iterate-independent stage matrix
(lumped mass / dt + epsilon * stiffness), factorized once per run.  The
time loop is strictly sequential; assembled operators are immutable and
shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (NodalField, assemble_consistent_mass, assemble_lumped_mass,
                       assemble_stiffness, element_basis_gradients)
from .diagnostics import make_record, selfsimilar_exponent
from .nonlinearity import CutoffParams, theta_matrices
from .spectral import (compute_eigendecomposition, fractional_inverse_operator)

#: Relative residual accepted from the factorized stage solves.
LINEAR_SOLVE_RTOL = 1e-13

MODES = ("standard", "selfsimilar")


class PicardError(RuntimeError):
    """Stage fixed-point iteration failed to converge."""

    def __init__(self, message, iters, residual):
        super().__init__(message)
        self.iters = iters
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters of the fully discrete scheme."""

    s: float
    dt: float
    T: float
    cutoff: CutoffParams
    epsilon: float = 1.0
    mode: str = "standard"
    lambda_drift: float | None = None
    picard_tol: float = 1e-10
    picard_max: int = 100
    snapshot_every: int = 0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order s={self.s} outside (0, 1)")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T < self.dt:
            raise ValueError("final time must be at least one step")
        if self.epsilon <= 0:
            raise ValueError("diffusion coefficient must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.picard_max < 1:
            raise ValueError("picard_max must be >= 1")

    @property
    def num_steps(self):
        return max(1, int(round(self.T / self.dt)))

    def drift_coefficient(self, d=2):
        if self.lambda_drift is not None:
            return self.lambda_drift
        return selfsimilar_exponent(self.s, d)


@dataclass(frozen=True)
class Operators:
    """Everything assembled once per (mesh, config) pair."""

    mesh: object
    s: float
    dt: float
    epsilon: float
    lumped: np.ndarray
    consistent: sp.csr_matrix
    stiffness: sp.csr_matrix
    decomp: object
    frac_op: np.ndarray           # dense map density -> potential
    basis_grads: np.ndarray       # (M, 3, 2)
    stage_solve: object           # factorized lumped/dt + eps*K
    stage_matrix: sp.csr_matrix

    def potential(self, values):
        return self.frac_op @ values


@dataclass(frozen=True)
class PicardResult:
    rho_next: NodalField
    c_next: NodalField
    iters: int
    residual: float


@dataclass
class RunResult:
    config: SolverConfig
    mesh: object
    records: list
    snapshots: list               # (step, rho, c) tuples
    rho_final: NodalField
    c_final: NodalField
    operators: Operators


def build_operators(mesh, cfg, decomp=None, frac_op=None):
    """Assemble matrices, eigendecomposition, fractional inverse, stage factorization.

    ``decomp``/``frac_op`` may be passed in to reuse the (expensive)
    eigendecomposition across configurations that share mesh and s, e.g.
    the cells of a time-step sweep.
    """
    lumped = assemble_lumped_mass(mesh)
    consistent = assemble_consistent_mass(mesh)
    stiffness = assemble_stiffness(mesh)
    if decomp is None:
        decomp = compute_eigendecomposition(stiffness, consistent, mesh)
    if frac_op is None:
        frac_op = fractional_inverse_operator(decomp, consistent, cfg.s, lumped,
                                              mesh.domain_area)
    stage = (sp.diags(lumped / cfg.dt) + cfg.epsilon * stiffness).tocsc()
    solve = spla.factorized(stage)
    return Operators(mesh=mesh, s=cfg.s, dt=cfg.dt, epsilon=cfg.epsilon,
                     lumped=lumped, consistent=consistent,
                     stiffness=stiffness, decomp=decomp, frac_op=frac_op,
                     basis_grads=element_basis_gradients(mesh),
                     stage_solve=solve, stage_matrix=stage.tocsr())


def smooth_initial_datum(rho0, dt, stiffness, lumped):
    """One implicit diffusion step applied to the interpolated initial datum.

    Solves (M_L + dt K) rho = M_L rho0.  On a weakly acute mesh the matrix
    is an M-matrix, so the output inherits the nodal bounds of the datum;
    the exact mean is preserved because the stiffness annihilates constants.
    """
    v0 = rho0.values
    if v0.min() < 0:
        raise ValueError("initial datum must be nonnegative")
    A = (sp.diags(lumped) + dt * stiffness).tocsc()
    out = spla.spsolve(A, lumped * v0)
    bound = float(np.max(v0))
    tol = 1e-12 * max(1.0, bound)
    if out.min() < -tol or out.max() > bound + tol:
        raise RuntimeError(
            f"smoothed datum violates bounds: min={out.min()!r}, max={out.max()!r}, "
            f"datum max={bound!r}")
    return NodalField(out, rho0.mesh)


def _scatter_element_vector(contrib, mesh):
    b = np.zeros(mesh.num_vertices)
    np.add.at(b, mesh.triangles.ravel(), contrib.ravel())
    return b


def assemble_transport_rhs(rho_iter, c, cutoff, mesh, basis_grads=None):
    """Load vector of the mobility-transport term: b_i = sum_K |K| (Theta grad c) . grad phi_i."""
    if basis_grads is None:
        basis_grads = element_basis_gradients(mesh)
    theta = theta_matrices(rho_iter.values, mesh, cutoff)
    grad_c = np.einsum("ma,maj->mj", c.values[mesh.triangles], basis_grads)
    flux = np.einsum("mij,mj->mi", theta, grad_c)
    contrib = np.einsum("m,maj,mj->ma", mesh.areas, basis_grads, flux)
    return _scatter_element_vector(contrib, mesh)


def assemble_drift_rhs(rho, lambda_drift, mesh, basis_grads=None):
    """Load vector of the confining drift (self-similar variables), one-point
    barycenter quadrature: d_i = -lambda sum_K |K| (y_bar rho_bar) . grad phi_i."""
    if basis_grads is None:
        basis_grads = element_basis_gradients(mesh)
    p = mesh.vertices[mesh.triangles]        # (M, 3, 2)
    ybar = p.mean(axis=1)                    # (M, 2)
    rbar = rho.values[mesh.triangles].mean(axis=1)
    flux = -lambda_drift * ybar * rbar[:, None]
    contrib = np.einsum("m,maj,mj->ma", mesh.areas, basis_grads, flux)
    return _scatter_element_vector(contrib, mesh)


def picard_step(rho_prev, cfg, ops):
    """One implicit Euler stage, solved by lagged fixed-point sweeps.

    The mobility matrix and the potential are both evaluated at the
    previous sweep's iterate; each sweep is a single solve with the
    factorized stage matrix.  Raises :class:`PicardError` if the sweep
    difference has not dropped below tolerance within ``picard_max``.
    """
    mesh = ops.mesh
    prev = rho_prev.values
    base_rhs = ops.lumped * prev / cfg.dt
    lam = cfg.drift_coefficient() if cfg.mode == "selfsimilar" else None
    cur = prev.copy()
    residual = np.inf
    for sweep in range(1, cfg.picard_max + 1):
        cur_field = NodalField(cur, mesh)
        c_vals = ops.potential(cur)
        rhs = base_rhs + assemble_transport_rhs(
            cur_field, NodalField(c_vals, mesh), cfg.cutoff, mesh, ops.basis_grads)
        if lam is not None:
            rhs += assemble_drift_rhs(cur_field, lam, mesh, ops.basis_grads)
        new = ops.stage_solve(rhs)
        lin_res = np.linalg.norm(ops.stage_matrix @ new - rhs)
        if lin_res > LINEAR_SOLVE_RTOL * max(np.linalg.norm(rhs), 1.0):
            raise RuntimeError(f"stage linear solve residual {lin_res!r} too large")
        residual = float(np.max(np.abs(new - cur)))
        scale = 1.0 + float(np.max(np.abs(cur)))
        cur = new
        if residual <= cfg.picard_tol * scale:
            break
    else:
        raise PicardError(
            f"stage iteration did not converge in {cfg.picard_max} sweeps "
            f"(last residual {residual!r})", cfg.picard_max, residual)
    rho_next = NodalField(cur, mesh)
    c_next = NodalField(ops.potential(cur), mesh)
    return PicardResult(rho_next=rho_next, c_next=c_next, iters=sweep,
                        residual=residual)


def run(cfg, rho0, mesh, ops=None):
    """Smooth the initial datum, then advance ``num_steps`` implicit Euler steps.

    ``rho0`` is the nodal interpolant of the raw (nonnegative) initial
    datum.  The upper cutoff is widened to 2 * max(rho0) if the configured
    value is smaller, so that the clamp is inactive on the physical range.
    Diagnostics are recorded at step 0 (after smoothing) and after every
    accepted step; snapshots at step 0, every ``snapshot_every`` steps
    (if positive), and at the final step.
    """
    sup0 = float(np.max(rho0.values))
    L_eff = max(cfg.cutoff.L_cap, 2.0 * sup0)
    if L_eff != cfg.cutoff.L_cap:
        cfg = replace(cfg, cutoff=CutoffParams(cfg.cutoff.delta, L_eff))
    if ops is None:
        ops = build_operators(mesh, cfg)
    elif (ops.mesh is not mesh or ops.s != cfg.s or ops.dt != cfg.dt
          or ops.epsilon != cfg.epsilon):
        raise ValueError("supplied operators do not match the run configuration")
    rho = smooth_initial_datum(rho0, cfg.dt, ops.stiffness, ops.lumped)
    c = NodalField(ops.potential(rho.values), mesh)
    records = [make_record(0, 0.0, rho, c, ops, cfg.cutoff, 0, 0.0)]
    snapshots = [(0, rho, c)]
    for n in range(1, cfg.num_steps + 1):
        try:
            result = picard_step(rho, cfg, ops)
        except (PicardError, RuntimeError) as exc:
            raise RuntimeError(f"step {n} (t={n * cfg.dt}) failed: {exc}") from exc
        rho, c = result.rho_next, result.c_next
        records.append(make_record(n, n * cfg.dt, rho, c, ops, cfg.cutoff,
                                   result.iters, result.residual))
        if cfg.snapshot_every > 0 and n % cfg.snapshot_every == 0 and n != cfg.num_steps:
            snapshots.append((n, rho, c))
    snapshots.append((cfg.num_steps, rho, c))
    return RunResult(config=cfg, mesh=mesh, records=records, snapshots=snapshots,
                     rho_final=rho, c_final=c, operators=ops)
