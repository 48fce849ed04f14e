"""Density cutoff, regularized entropy, and the per-element chain-rule matrix.

The cutoff ``beta`` clamps the density to [delta, L_cap].  The regularized
entropy ``g_reg`` extends s(log s - 1) + 1 by quadratic tails below delta and
above L_cap; its second derivative is exactly 1/beta.  The element matrix
built by :func:`theta_matrix` turns the discrete chain rule

    Theta(phi) . grad pi_h(g_reg'(phi)) = grad phi

into an exact per-element identity, which is what every dissipation bound
of the scheme hinges on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Relative tolerance for treating two vertex values as equal in the
#: difference quotient; below it the quotient is replaced by its analytic
#: limit beta(value).
EQUAL_VALUE_RTOL = 1e-14


@dataclass(frozen=True)
class CutoffParams:
    """Lower/upper clamp levels, 0 < delta < 1 < L_cap."""

    delta: float
    L_cap: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0 < self.L_cap):
            raise ValueError(
                f"cutoff requires 0 < delta < 1 < L_cap, got ({self.delta}, {self.L_cap})")


def beta(s, p):
    """Clamp of s to [delta, L_cap]; continuous, nondecreasing, 1-Lipschitz."""
    return np.clip(s, p.delta, p.L_cap)


def g_reg(s, p, order=0):
    """Regularized entropy (order 0) or its first/second derivative.

    Branches: quadratic below delta, s(log s - 1) + 1 between, quadratic
    above L_cap; C^2 across the joins, and beta * g_reg'' == 1 everywhere.
    """
    s = np.asarray(s, dtype=float)
    d, L = p.delta, p.L_cap
    low = s <= d
    high = s >= L
    mid = ~(low | high)
    safe = np.where(mid, s, 1.0)  # keep log() off the tails
    out = np.empty_like(s)
    if order == 0:
        out[low] = (s[low] ** 2 - d * d) / (2 * d) + (np.log(d) - 1) * s[low] + 1
        out[mid] = safe[mid] * (np.log(safe[mid]) - 1) + 1
        out[high] = (s[high] ** 2 - L * L) / (2 * L) + (np.log(L) - 1) * s[high] + 1
    elif order == 1:
        out[low] = s[low] / d + np.log(d) - 1
        out[mid] = np.log(safe[mid])
        out[high] = s[high] / L + np.log(L) - 1
    elif order == 2:
        out[low] = 1.0 / d
        out[mid] = 1.0 / safe[mid]
        out[high] = 1.0 / L
    else:
        raise ValueError("order must be 0, 1, or 2")
    return out if out.ndim else float(out)


def g_entropy(s):
    """The entropy s(log s - 1) + 1 for s >= 0, with the continuous value 1 at 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("entropy undefined for negative arguments")
    pos = s > 0
    out = np.ones_like(s)
    out[pos] = s[pos] * (np.log(s[pos]) - 1) + 1
    return out if out.ndim else float(out)


def _diag_quotients(v0, vj, p):
    """Difference quotients (vj - v0) / (g'(vj) - g'(v0)) with the equal-value limit."""
    v0 = np.asarray(v0, dtype=float)
    vj = np.asarray(vj, dtype=float)
    scale = np.maximum(np.maximum(np.abs(v0), np.abs(vj)), 1.0)
    equal = np.abs(vj - v0) <= EQUAL_VALUE_RTOL * scale
    dg = g_reg(vj, p, order=1) - g_reg(v0, p, order=1)
    # g' is strictly increasing, so dg only vanishes on the equal branch
    quot = np.where(equal, beta(vj, p), (vj - v0) / np.where(equal, 1.0, dg))
    return quot


def theta_matrix(elem_vertex_values, amap, p):
    """Chain-rule matrix of one element: (B^T)^{-1} diag(quotients) B^T.

    ``elem_vertex_values`` lists the P1 values at (P0, P1, P2); the
    diagonal factor clamps to [delta, L_cap] entrywise, so
    delta |xi|^2 <= xi^T Theta_tilde xi <= L_cap |xi|^2.
    """
    v = np.asarray(elem_vertex_values, dtype=float)
    if v.shape != (3,):
        raise ValueError("expected the 3 vertex values of a triangle")
    quot = _diag_quotients(np.array([v[0], v[0]]), v[1:], p)
    BT = amap.B.T
    return np.linalg.solve(BT, np.diag(quot) @ BT)


def theta_matrices(values, mesh, p):
    """Vectorized chain-rule matrices for all elements, shape (M, 2, 2)."""
    v = np.asarray(values, dtype=float)[mesh.triangles]  # (M, 3)
    q1 = _diag_quotients(v[:, 0], v[:, 1], p)
    q2 = _diag_quotients(v[:, 0], v[:, 2], p)
    BT = np.swapaxes(mesh.B, 1, 2)
    theta_tilde = np.zeros((mesh.num_triangles, 2, 2))
    theta_tilde[:, 0, 0] = q1
    theta_tilde[:, 1, 1] = q2
    return np.linalg.solve(BT, theta_tilde @ BT)
