import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpme.assembly import element_gradients, interpolate, NodalField
from fpme.mesh import AffineMap, build_structured_rect_mesh
from fpme.nonlinearity import (CutoffParams, beta, g_entropy, g_reg,
                               theta_matrices, theta_matrix)

P = CutoffParams(0.1, 2.0)

finite_vals = st.floats(-50, 50, allow_nan=False)


class TestCutoffParams:
    @pytest.mark.parametrize("delta,L", [(0.0, 2.0), (1.0, 2.0), (0.5, 1.0),
                                         (0.5, 0.9), (-0.1, 2.0)])
    def test_invalid_rejected(self, delta, L):
        with pytest.raises(ValueError):
            CutoffParams(delta, L)


class TestBeta:
    def test_middle_branch(self):
        assert beta(0.5, P) == 0.5

    def test_lower_clamp(self):
        assert beta(-3.0, P) == 0.1

    def test_upper_clamp(self):
        assert beta(7.0, P) == 2.0

    @given(a=finite_vals, b=finite_vals)
    @settings(max_examples=200)
    def test_monotone_and_lipschitz(self, a, b):
        fa, fb = beta(a, P), beta(b, P)
        if a <= b:
            assert fa <= fb
        assert abs(fa - fb) <= abs(a - b) + 1e-15

    @given(s=finite_vals)
    @settings(max_examples=200)
    def test_range(self, s):
        assert P.delta <= beta(s, P) <= P.L_cap


class TestRegularizedEntropy:
    def test_first_derivative_log_on_middle_branch(self):
        assert g_reg(1.0, P, order=1) == 0.0
        assert g_reg(0.5, P, order=1) == pytest.approx(np.log(0.5), rel=1e-15)

    def test_second_derivative_lower_tail(self):
        assert g_reg(0.05, P, order=2) == pytest.approx(10.0, rel=1e-15)
        assert g_reg(-3.0, P, order=2) == pytest.approx(10.0, rel=1e-15)

    @pytest.mark.parametrize("s", [-1.0, 0.05, 1.0, 2.0, 6.0])
    def test_beta_times_g2_is_one(self, s):
        # the clamp is exactly the reciprocal of the entropy's curvature
        assert beta(s, P) * g_reg(s, P, order=2) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("joint", [P.delta, P.L_cap])
    def test_c2_continuity_at_joints(self, joint):
        eps = 1e-9
        for order in (0, 1, 2):
            left = g_reg(joint - eps, P, order)
            right = g_reg(joint + eps, P, order)
            assert left == pytest.approx(right, rel=1e-6, abs=1e-7)

    def test_matches_entropy_between_cutoffs(self):
        s = np.linspace(P.delta + 1e-3, P.L_cap - 1e-3, 41)
        assert np.allclose(g_reg(s, P, 0), g_entropy(s), rtol=1e-14)

    @given(s=finite_vals)
    @settings(max_examples=200)
    def test_curvature_bounds(self, s):
        g2 = g_reg(s, P, order=2)
        assert 1.0 / P.L_cap - 1e-15 <= g2 <= 1.0 / P.delta + 1e-15

    @given(a=finite_vals, b=finite_vals)
    @settings(max_examples=200)
    def test_convexity(self, a, b):
        mid = 0.5 * (a + b)
        chord = 0.5 * (g_reg(a, P, 0) + g_reg(b, P, 0))
        assert g_reg(mid, P, 0) <= chord + 1e-11 * max(1.0, abs(chord))

    def test_negative_tail_quadratic_lower_bound(self):
        # min{G, s G'} >= s^2 / (2 delta) for s <= 0
        s = np.linspace(-30, 0, 301)
        G = g_reg(s, P, 0)
        sG1 = s * g_reg(s, P, 1)
        lower = s**2 / (2 * P.delta)
        assert np.all(np.minimum(G, sG1) >= lower - 1e-10)

    def test_vectorized_matches_scalar(self):
        s = np.array([-2.0, 0.05, 0.7, 3.0])
        for order in (0, 1, 2):
            vec = g_reg(s, P, order)
            assert np.allclose(vec, [g_reg(v, P, order) for v in s], rtol=1e-15)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            g_reg(1.0, P, order=3)


class TestEntropy:
    def test_value_at_one(self):
        assert g_entropy(1.0) == 0.0

    def test_value_at_zero(self):
        assert g_entropy(0.0) == 1.0

    def test_value_at_e(self):
        # substituting s = e: e (log e - 1) + 1 = 1
        assert g_entropy(np.e) == pytest.approx(1.0, rel=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            g_entropy(-0.1)
        with pytest.raises(ValueError):
            g_entropy(np.array([0.5, -1e-12]))

    @given(s=st.floats(0, 100))
    @settings(max_examples=100)
    def test_nonnegative(self, s):
        assert g_entropy(s) >= -1e-15


def random_affine_map(rng):
    while True:
        B = rng.uniform(-1.5, 1.5, size=(2, 2))
        if abs(np.linalg.det(B)) > 0.2:
            return AffineMap(B=B, p0=rng.uniform(-1, 1, 2))


class TestThetaMatrix:
    def test_constant_field_gives_scaled_identity(self, rng):
        v = 0.9  # inside (delta, L): beta(v) = v
        am = random_affine_map(rng)
        th = theta_matrix([v, v, v], am, P)
        assert np.allclose(th, v * np.eye(2), atol=1e-12)

    def test_difference_quotient_example(self):
        p = CutoffParams(0.01, 10.0)
        am = AffineMap(B=np.eye(2), p0=np.zeros(2))
        th = theta_matrix([1.0, np.e, 1.0], am, p)
        # middle branch: (e - 1) / (log e - log 1) = e - 1
        assert th[0, 0] == pytest.approx(np.e - 1, rel=1e-14)
        assert th[1, 1] == pytest.approx(beta(1.0, p), rel=1e-14)

    def test_chain_rule_identity_random(self, rng):
        # Theta grad pi_h(g'(phi)) = grad phi, exactly, on random elements
        p = CutoffParams(0.05, 3.0)
        for _ in range(200):
            am = random_affine_map(rng)
            vals = rng.uniform(-1.0, 4.0, 3)
            th = theta_matrix(vals, am, p)
            dphi = np.array([vals[1] - vals[0], vals[2] - vals[0]])
            gvals = g_reg(vals, p, order=1)
            dg = np.array([gvals[1] - gvals[0], gvals[2] - gvals[0]])
            invBT = np.linalg.inv(am.B.T)
            lhs = th @ (invBT @ dg)
            rhs = invBT @ dphi
            scale = max(1.0, np.max(np.abs(rhs)))
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    def test_equal_value_branch_tolerance(self, rng):
        am = AffineMap(B=np.eye(2), p0=np.zeros(2))
        v = 0.7
        th = theta_matrix([v, v * (1 + 1e-15), v], am, P)
        assert np.allclose(np.diag(th), beta(v, P), rtol=1e-12)

    @given(vals=st.lists(st.floats(-5, 8), min_size=3, max_size=3))
    @settings(max_examples=200)
    def test_diagonal_factor_bounds(self, vals):
        # delta |xi|^2 <= xi' Theta_tilde xi <= L |xi|^2 at the diagonal level;
        # pairs inside the O(eps) near-equal band are excluded: there the
        # difference quotient loses relative accuracy to cancellation
        from hypothesis import assume
        for j in (1, 2):
            d = abs(vals[j] - vals[0])
            assume(d == 0.0 or d > 1e-8 * max(abs(vals[0]), abs(vals[j]), 1.0))
        am = AffineMap(B=np.eye(2), p0=np.zeros(2))
        th = theta_matrix(vals, am, P)  # identity map: Theta == Theta_tilde
        diag = np.diag(th)
        assert np.all(diag >= P.delta * (1 - 1e-9))
        assert np.all(diag <= P.L_cap * (1 + 1e-9))

    def test_lipschitz_dependence(self, rng):
        # || Theta_t(phi1) - Theta_t(phi2) || <= (L/delta) max_j (|d_j| + |d_0|)
        am = AffineMap(B=np.eye(2), p0=np.zeros(2))
        for _ in range(300):
            v1 = rng.uniform(-2, 4, 3)
            v2 = v1 + rng.uniform(-0.5, 0.5, 3)
            t1 = np.diag(theta_matrix(v1, am, P))
            t2 = np.diag(theta_matrix(v2, am, P))
            bound = (P.L_cap / P.delta) * max(
                abs(v1[j] - v2[j]) + abs(v1[0] - v2[0]) for j in (1, 2))
            assert np.max(np.abs(t1 - t2)) <= bound + 1e-12

    def test_batch_matches_single(self, rng):
        m = build_structured_rect_mesh((0, 1, 0, 1), 3, 3)
        vals = rng.uniform(-1, 3, m.num_vertices)
        batch = theta_matrices(vals, m, P)
        from fpme.mesh import affine_map
        for elem in range(m.num_triangles):
            single = theta_matrix(vals[m.triangles[elem]], affine_map(m, elem), P)
            assert np.allclose(batch[elem], single, atol=1e-13)

    def test_mobility_approaches_clamp_under_refinement(self):
        # sum_K int_K |Theta - beta I|^2 decreases along (h, delta) -> 0
        deviations = []
        for n, delta in ((8, 1e-1), (16, 1e-2), (32, 1e-3)):
            m = build_structured_rect_mesh((0, 1, 0, 1), n, n)
            p = CutoffParams(delta, 4.0)
            f = interpolate(lambda x, y: 1.5 + np.sin(2 * x) * np.cos(y), m)
            th = theta_matrices(f.values, m, p)
            bval = beta(f.values[m.triangles].mean(axis=1), p)
            diff = th - bval[:, None, None] * np.eye(2)[None]
            deviations.append(float(np.sum(m.areas * np.sum(diff**2, axis=(1, 2)))))
        assert deviations[0] > deviations[1] > deviations[2]


class TestThetaChainRuleOnMesh:
    def test_identity_through_element_gradients(self, rng):
        p = CutoffParams(0.05, 5.0)
        m = build_structured_rect_mesh((0, 2, -1, 1), 4, 3)
        vals = rng.uniform(-0.5, 3.0, m.num_vertices)
        field = NodalField(vals, m)
        gfield = NodalField(g_reg(vals, p, order=1), m)
        th = theta_matrices(vals, m, p)
        lhs = np.einsum("mij,mj->mi", th, element_gradients(gfield))
        rhs = element_gradients(field)
        scale = max(1.0, np.max(np.abs(rhs)))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale
