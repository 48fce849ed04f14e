import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fpme.assembly import (NodalField, assemble_consistent_mass,
                           assemble_lumped_mass, assemble_stiffness,
                           element_basis_gradients, element_gradient,
                           element_gradients, evaluate, export_matrix_coo,
                           integrate_pi_h, interpolate, lumped_mean)
from fpme.mesh import Mesh, build_structured_rect_mesh


def reference_triangle_mesh():
    return Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]),
                (0, 1, 0, 1))


class TestStiffness:
    def test_reference_triangle_local_matrix(self):
        # hand integration of constant P1 gradients on the reference element
        K = assemble_stiffness(reference_triangle_mesh()).toarray()
        expected = 0.5 * np.array([[2.0, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        assert np.allclose(K, expected, atol=1e-15)

    def test_constants_in_nullspace(self, unit_square_8x8):
        K = assemble_stiffness(unit_square_8x8)
        assert np.max(np.abs(K @ np.ones(unit_square_8x8.num_vertices))) < 1e-13

    def test_dirichlet_energy_of_linear(self, unit_square_8x8):
        u = interpolate(lambda x, y: x, unit_square_8x8)
        K = assemble_stiffness(unit_square_8x8)
        assert u.values @ (K @ u.values) == pytest.approx(1.0, rel=1e-13)

    def test_symmetry_and_psd(self, unit_square_2x2):
        K = assemble_stiffness(unit_square_2x2).toarray()
        assert np.allclose(K, K.T, atol=1e-15)
        w = np.linalg.eigvalsh(K)
        assert w[0] > -1e-13
        # nullspace of a connected mesh is exactly the constants
        assert np.sum(np.abs(w) < 1e-10) == 1

    def test_crisscross_psd_nullspace(self):
        m = build_structured_rect_mesh((0, 1, 0, 1), 3, 3, pattern="crisscross")
        w = np.linalg.eigvalsh(assemble_stiffness(m).toarray())
        assert w[0] > -1e-12
        assert np.sum(np.abs(w) < 1e-9) == 1


class TestMasses:
    def test_reference_triangle_lumped(self):
        ml = assemble_lumped_mass(reference_triangle_mesh())
        assert np.allclose(ml, 1 / 6)

    def test_lumped_partition_of_unity(self, tiny_mesh):
        assert assemble_lumped_mass(tiny_mesh).sum() == pytest.approx(1.0, rel=1e-13)

    def test_reference_triangle_consistent(self):
        M = assemble_consistent_mass(reference_triangle_mesh()).toarray()
        expected = np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0
        assert np.allclose(M, expected, atol=1e-16)

    def test_total_mass(self, unit_square_8x8):
        M = assemble_consistent_mass(unit_square_8x8)
        ones = np.ones(unit_square_8x8.num_vertices)
        assert ones @ (M @ ones) == pytest.approx(1.0, rel=1e-13)

    def test_row_sums_match_lumped(self, unit_square_8x8):
        M = assemble_consistent_mass(unit_square_8x8)
        ml = assemble_lumped_mass(unit_square_8x8)
        rows = np.asarray(M.sum(axis=1)).ravel()
        assert np.max(np.abs(rows - ml)) < 1e-13

    def test_consistent_positive_definite(self, unit_square_2x2):
        w = np.linalg.eigvalsh(assemble_consistent_mass(unit_square_2x2).toarray())
        assert w[0] > 0

    @given(arrays(np.float64, 9, elements=st.floats(-10, 10)))
    @settings(max_examples=50, deadline=None)
    def test_nodal_jensen_inequality(self, vals):
        # (pi_h phi)^2 <= pi_h(phi^2): consistent vs lumped quadrature of squares
        m = build_structured_rect_mesh((0, 1, 0, 1), 2, 2)
        M = assemble_consistent_mass(m)
        ml = assemble_lumped_mass(m)
        assert vals @ (M @ vals) <= ml @ vals**2 + 1e-12 * max(1.0, np.max(vals**2))


class TestInterpolate:
    def test_constant(self, unit_square_2x2):
        f = interpolate(lambda x, y: np.ones_like(x), unit_square_2x2)
        assert np.all(f.values == 1.0)

    def test_coordinate(self, unit_square_2x2):
        f = interpolate(lambda x, y: x, unit_square_2x2)
        assert np.array_equal(f.values, unit_square_2x2.vertices[:, 0])

    def test_gaussian_vertexwise(self, unit_square_2x2):
        sigma = 0.05
        f = interpolate(lambda x, y: np.exp(-(x**2 + y**2) / (2 * np.pi * sigma)),
                        unit_square_2x2)
        v = unit_square_2x2.vertices
        expected = np.exp(-(v[:, 0] ** 2 + v[:, 1] ** 2) / (2 * np.pi * sigma))
        assert np.allclose(f.values, expected, rtol=1e-15)

    def test_nonfinite_reports_vertex(self, unit_square_2x2):
        with pytest.raises(ValueError, match="vertex"):
            interpolate(lambda x, y: np.where(x > 0.9, np.inf, 1.0), unit_square_2x2)

    def test_field_length_validation(self, unit_square_2x2):
        with pytest.raises(ValueError):
            NodalField(np.ones(5), unit_square_2x2)


class TestElementGradients:
    def test_linear_x(self, unit_square_8x8):
        f = interpolate(lambda x, y: x, unit_square_8x8)
        g = element_gradients(f)
        assert np.allclose(g, [1.0, 0.0], atol=1e-13)

    def test_constant(self, unit_square_8x8):
        f = interpolate(lambda x, y: np.full_like(x, 3.7), unit_square_8x8)
        assert np.allclose(element_gradients(f), 0.0, atol=1e-13)

    def test_linear_combination(self, unit_square_8x8):
        f = interpolate(lambda x, y: x + 2 * y, unit_square_8x8)
        g = element_gradient(f, 17)
        assert np.allclose(g, [1.0, 2.0], atol=1e-13)

    def test_single_matches_batch(self, unit_square_2x2, rng):
        f = NodalField(rng.standard_normal(unit_square_2x2.num_vertices),
                       unit_square_2x2)
        batch = element_gradients(f)
        for elem in range(unit_square_2x2.num_triangles):
            assert np.allclose(element_gradient(f, elem), batch[elem], atol=1e-13)

    def test_basis_gradients_sum_to_zero(self, unit_square_8x8):
        g = element_basis_gradients(unit_square_8x8)
        assert np.max(np.abs(g.sum(axis=1))) < 1e-13


class TestIntegratePiH:
    def test_identity_of_ones(self, unit_square_8x8):
        f = interpolate(lambda x, y: np.ones_like(x), unit_square_8x8)
        assert integrate_pi_h(lambda s: s, f) == pytest.approx(1.0, rel=1e-13)

    def test_negative_part_of_nonnegative_field(self, unit_square_2x2, rng):
        f = NodalField(rng.uniform(0, 5, unit_square_2x2.num_vertices), unit_square_2x2)
        val = integrate_pi_h(lambda s: np.minimum(s, 0.0) ** 2, f)
        assert val == 0.0

    def test_entropy_of_uniform_state_vanishes(self, unit_square_2x2):
        from fpme.nonlinearity import g_entropy
        f = interpolate(lambda x, y: np.ones_like(x), unit_square_2x2)
        assert integrate_pi_h(g_entropy, f) == pytest.approx(0.0, abs=1e-15)

    def test_mean_via_lumped_equals_exact_integral(self, rng):
        # P1 exactness: sum_i M_i v_i integrates v_h exactly
        m = build_structured_rect_mesh((0, 2, 0, 1), 5, 4)
        f = interpolate(lambda x, y: 1 + 0.5 * x - 0.25 * y, m)
        ml = assemble_lumped_mass(m)
        exact = 2.0 * (1 + 0.5 * 1.0 - 0.25 * 0.5)  # integral of the affine function
        assert ml @ f.values == pytest.approx(exact, rel=1e-13)
        assert lumped_mean(f.values, ml, m.domain_area) == pytest.approx(exact / 2, rel=1e-13)

    def test_nonfinite_g_rejected(self, unit_square_2x2):
        f = interpolate(lambda x, y: np.ones_like(x), unit_square_2x2)
        with pytest.raises(ValueError):
            integrate_pi_h(lambda s: np.log(s - 1.0), f)


class TestEvaluate:
    def test_exact_on_p1(self, rng):
        m = build_structured_rect_mesh((-1, 1, -1, 1), 6, 5)
        f = interpolate(lambda x, y: 2 - x + 3 * y, m)
        pts = rng.uniform(-1, 1, size=(40, 2))
        vals = evaluate(f, pts)
        assert np.allclose(vals, 2 - pts[:, 0] + 3 * pts[:, 1], atol=1e-12)

    def test_vertices_reproduced(self, rng):
        m = build_structured_rect_mesh((0, 1, 0, 1), 4, 4, pattern="crisscross")
        f = NodalField(rng.standard_normal(m.num_vertices), m)
        assert np.allclose(evaluate(f, m.vertices), f.values, atol=1e-12)


def test_export_matrix_coo(tmp_path, tiny_mesh):
    K = assemble_stiffness(tiny_mesh)
    path = export_matrix_coo(K, tmp_path / "K.txt")
    lines = open(path).read().splitlines()
    assert lines[0].startswith("#")
    r, c, v = lines[1].split()
    assert float(v) == K.toarray()[int(r), int(c)]
