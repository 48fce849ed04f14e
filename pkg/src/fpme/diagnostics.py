"""Per-step conserved/dissipated quantities and run-level validation metrics.

Every record is a pure function of the current (density, potential) pair and
the assembled operators.  The unregularized entropy clips the density at
zero: the scheme tolerates O(sqrt(delta)) undershoots, and the clipped part
is controlled by the separately reported negative-part measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .nonlinearity import g_entropy, g_reg

DIAG_COLUMNS = (
    "step", "time", "mass", "linf", "min_val", "neg_measure", "entropy_reg",
    "entropy", "energy", "grad_product", "hs_norm_c", "picard_iters",
    "picard_residual",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    time: float
    mass: float
    linf: float
    min_val: float
    neg_measure: float
    entropy_reg: float
    entropy: float
    energy: float
    grad_product: float
    hs_norm_c: float
    picard_iters: int
    picard_residual: float

    def as_row(self):
        return [getattr(self, f.name) for f in fields(self)]


def energy(rho, c, lumped, consistent):
    """Free energy: clipped entropy integral minus half the interaction pairing.

    The interaction uses the consistent mass so it matches the spectral
    eigen-sum identity exactly.
    """
    ent = float(lumped @ g_entropy(np.maximum(rho.values, 0.0)))
    interaction = -0.5 * float(rho.values @ (consistent @ c.values))
    return ent + interaction


def make_record(step, time, rho, c, ops, cutoff, picard_iters, picard_residual):
    """Assemble one diagnostics row from the state and assembled operators.

    ``ops`` provides lumped mass, consistent mass, stiffness, and the
    spectral decomposition (for the fractional norm of the potential).
    """
    from .spectral import discrete_sobolev_norms, project_zero_mean

    v = rho.values
    neg = np.minimum(v, 0.0)
    entropy_reg = float(ops.lumped @ g_reg(v, cutoff, order=0))
    ent = float(ops.lumped @ g_entropy(np.maximum(v, 0.0)))
    interaction = -0.5 * float(v @ (ops.consistent @ c.values))
    grad_product = float(c.values @ (ops.stiffness @ v))
    cstar = project_zero_mean(c, ops.lumped)
    hs = discrete_sobolev_norms(ops.decomp, ops.consistent, cstar, ops.s,
                                lumped=ops.lumped)["Hs_norm"]
    return DiagnosticsRecord(
        step=int(step),
        time=float(time),
        mass=float(ops.lumped @ v),
        linf=float(np.max(np.abs(v))),
        min_val=float(v.min()),
        neg_measure=float(ops.lumped @ neg**2),
        entropy_reg=entropy_reg,
        entropy=ent,
        energy=ent + interaction,
        grad_product=grad_product,
        hs_norm_c=float(hs),
        picard_iters=int(picard_iters),
        picard_residual=float(picard_residual),
    )


def decay_rate_fit(series):
    """Exponential rate fitted to the tail half of a positive (time, value) series.

    Returns r such that value ~ exp(-r t) on the tail (least squares on
    log values); a constant series gives r = 0.
    """
    pts = [(float(t), float(v)) for t, v in series]
    if len(pts) < 5:
        raise ValueError("need at least 5 points for a decay fit")
    if any(v <= 0 for _, v in pts):
        raise ValueError("decay fit requires positive values")
    tail = pts[len(pts) // 2:]
    t = np.array([p[0] for p in tail])
    logv = np.log([p[1] for p in tail])
    slope = np.polyfit(t, logv, 1)[0]
    return float(-slope)


def selfsimilar_exponent(s, d=2):
    """Drift exponent 1 / (d + 2 - 2s) of the self-similar change of variables."""
    return 1.0 / (d + 2 - 2 * s)


def barenblatt_constant(s, d=2):
    """Normalizing constant of the compactly supported steady profile."""
    return (d * math.gamma(d / 2)
            / ((d + 2 * s) * 4**s * math.gamma(2 - s) * math.gamma(d / 2 + 1 - s)))


def barenblatt_profile(y, s, d=2):
    """Steady profile k_{s,d} (1 - |y|^2)_+^s in self-similar variables."""
    if not 0.0 < s < 1.0:
        raise ValueError("profile defined for s in (0, 1)")
    if d not in (2, 3):
        raise ValueError("profile defined for d in {2, 3}")
    y = np.atleast_2d(np.asarray(y, dtype=float))
    r2 = np.sum(y**2, axis=1)
    vals = barenblatt_constant(s, d) * np.maximum(1.0 - r2, 0.0) ** s
    return vals if vals.size > 1 else float(vals[0])


def profile_mass(s, d=2):
    """Exact integral of the steady profile: k_{s,d} pi^{d/2} Gamma(s+1) / Gamma(s+1+d/2)."""
    return (barenblatt_constant(s, d) * math.pi ** (d / 2) * math.gamma(s + 1)
            / math.gamma(s + 1 + d / 2))


def profile_distance(rho, s, d, mesh, norm="L1", lumped=None):
    """Distance between the mass-normalized density and the steady profile.

    The field is normalized by its (exact, lumped) discrete mass, the
    profile by its exact continuous mass; the difference is integrated
    with the edge-midpoint rule, so the interpolation error of the
    profile's kinked edge is visible (self-distance of the interpolant
    decays under refinement instead of vanishing identically).
    """
    from .assembly import assemble_lumped_mass

    if d != 2:
        raise ValueError("distance quadrature implemented for d = 2")
    if lumped is None:
        lumped = assemble_lumped_mass(mesh)
    mass_rho = float(lumped @ rho.values)
    if mass_rho <= 0:
        raise ValueError("cannot normalize a field with nonpositive mass")
    p = mesh.vertices[mesh.triangles]           # (M, 3, 2)
    v = rho.values[mesh.triangles] / mass_rho   # (M, 3)
    k = barenblatt_constant(s, d) / profile_mass(s, d)
    total = 0.0
    weights = mesh.areas / 3.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (p[:, a] + p[:, b])
        rho_mid = 0.5 * (v[:, a] + v[:, b])
        phi_mid = k * np.maximum(1.0 - np.sum(mid**2, axis=1), 0.0) ** s
        diff = rho_mid - phi_mid
        if norm == "L1":
            total += float(weights @ np.abs(diff))
        elif norm == "L2":
            total += float(weights @ diff**2)
        else:
            raise ValueError(f"unknown norm {norm!r}")
    return total if norm == "L1" else math.sqrt(total)


def entropy_dissipation_check(records, slack=1e-9):
    """Largest per-step increase of the regularized entropy (<= slack passes)."""
    worst = 0.0
    for prev, cur in zip(records, records[1:]):
        worst = max(worst, cur.entropy_reg - prev.entropy_reg)
    return worst
