import numpy as np
import pytest

from genred import jets
from genred import structures as st
from genred.calculus import constant_field, form_field, wedge_basis
from genred.linalg import inclusion_angle, intersect, pairing_matrix, restrict_operator, span, subspace_equal
from genred.structures import (BihermitianData, StructureError, bihermitian_from_gk, check_ghk, check_gk,
                               dc_form_residual, dirac_graph_bivector, dirac_graph_form, eigenbundle,
                               eigenbundle_eig, from_complex, from_symplectic, gk_from_bihermitian,
                               integrability_residual, metric_from)

from helpers import gk_pair, generalized_metric, nijenhuis_tm, random_antisymmetric, random_hermitian_complex, random_spd

I2 = np.array([[0.0, -1.0], [1.0, 0.0]])
I4 = np.kron(np.eye(2), I2)

# left multiplication by i, j, k on x1 + x2 i + x3 j + x4 k
Q1 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
Q2 = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], float)
Q3 = Q1 @ Q2


def _rotated_complex(plane):
    """Standard I conjugated by a rotation through angle x1 in the given coordinate plane."""
    a, b = plane

    def fn(x):
        zero = x[0] * 0.0
        one = zero + 1.0
        c, s = jets.cos(x[0]), jets.sin(x[0])
        rows = [[one if i == j else zero for j in range(4)] for i in range(4)]
        rows[a][a], rows[a][b], rows[b][a], rows[b][b] = c, -s, s, c
        R = jets.stack([jets.stack(r) for r in rows])
        return R @ jets.as_jet(I4, x) @ R.T

    return fn


class TestConstructors:
    def test_symplectic_on_the_plane(self):
        J = from_symplectic(wedge_basis(2, 0, 1)).value([0.0, 0.0])
        assert np.allclose(J @ [1, 0, 0, 0], [0, 0, 0, 1])
        assert np.allclose(J @ [0, 0, 0, 1], [-1, 0, 0, 0])

    def test_symplectic_squares_to_minus_one(self, rng):
        w = random_antisymmetric(rng, 4) + 2 * wedge_basis(4, 0, 1) + 2 * wedge_basis(4, 2, 3)
        J = from_symplectic(w).value(np.zeros(4))
        assert np.abs(J @ J + np.eye(8)).max() < 1e-12

    def test_degenerate_symplectic(self):
        with pytest.raises(StructureError, match="degenerate"):
            from_symplectic(wedge_basis(3, 0, 1)).value(np.zeros(3))

    def test_complex_on_the_plane(self):
        J = from_complex(I2).value([0.0, 0.0])
        assert np.allclose(J @ [1, 0, 0, 0], [0, -1, 0, 0])
        assert np.allclose(J @ [0, 0, 1, 0], [0, 0, 0, -1])
        assert np.abs(J @ J + np.eye(4)).max() == 0.0

    def test_complex_rejects_non_complex(self):
        with pytest.raises(StructureError):
            from_complex(np.eye(2)).value([0.0, 0.0])

    def test_metric_identity(self):
        G = metric_from(np.eye(2)).value([0.0, 0.0])
        assert np.allclose(G @ [1, 0, 0, 0], [0, 0, 1, 0])

    def test_metric_positive_and_involutive(self, rng):
        for _ in range(10):
            g, b = random_spd(rng, 4), random_antisymmetric(rng, 4)
            G = metric_from(g, b).value(np.zeros(4))
            Q = pairing_matrix(4)
            assert np.linalg.eigvalsh(0.5 * (Q @ G + (Q @ G).T)).min() > 0
            assert np.abs(G @ G - np.eye(8)).max() < 1e-10
            assert np.allclose(G, generalized_metric(g, b))

    def test_metric_rejects_indefinite(self):
        with pytest.raises(StructureError):
            metric_from(np.diag([1.0, -1.0])).value([0.0, 0.0])


class TestBihermitian:
    def test_kahler_case(self, rng):
        g = random_spd(rng, 4)
        I = random_hermitian_complex(rng, g)
        data = BihermitianData.build(I, I, g)
        J, Jp, G = gk_from_bihermitian(data, check_at=np.zeros(4))
        p = np.zeros(4)
        # with these sign conventions J is the structure of -I and J' the symplectic one of g I
        assert np.allclose(J.value(p), from_complex(-I).value(p), atol=1e-12)
        assert np.allclose(Jp.value(p), from_symplectic((g @ I).T).value(p), atol=1e-10)

    def test_random_pair_is_orthogonal_complex(self, rng):
        Q = pairing_matrix(4)
        for _ in range(10):
            g, b = random_spd(rng, 4), random_antisymmetric(rng, 4)
            Ip, Im = random_hermitian_complex(rng, g), random_hermitian_complex(rng, g)
            J, Jp, G = gk_from_bihermitian(BihermitianData.build(Ip, Im, g, b))
            Jv, Gv = J.value(np.zeros(4)), G.value(np.zeros(4))
            assert np.allclose(Jv, gk_pair(Ip, Im, g, b), atol=1e-10)
            assert np.abs(Jv @ Jv + np.eye(8)).max() < 1e-10
            assert np.abs(Jv.T @ Q @ Jv - Q).max() < 1e-10
            assert np.abs(Jv @ Gv - Gv @ Jv).max() < 1e-10

    def test_hyperkahler_acts_by_i1_and_i2_on_eigenspaces(self):
        J, _, G = gk_from_bihermitian(BihermitianData.build(Q1, Q2, np.eye(4)))
        p = np.zeros(4)
        Jv = J.value(p)
        for sign, I in ((1, Q1), (-1, Q2)):
            C = span(list(np.vstack([np.eye(4), sign * np.eye(4)]).T))
            on_C = restrict_operator(Jv, C)
            # the anchor identifies C with TM; compare in that frame
            T = C.basis[:4]
            assert np.allclose(T @ on_C @ np.linalg.inv(T), I, atol=1e-12)

    def test_invalid_data_is_rejected(self):
        with pytest.raises(StructureError):
            BihermitianData.build(I4, I4, np.diag([1.0, 2.0, 1.0, 1.0])).check(np.zeros(4))

    def test_round_trip_with_varying_metric_and_b(self, rng):
        Ip = random_hermitian_complex(rng, np.eye(4))
        Im = random_hermitian_complex(rng, np.eye(4))
        bc = random_antisymmetric(rng, 4)

        def g(x):
            return jets.as_jet(np.eye(4), x) * (1.5 + jets.sin(x[0]) * x[1])

        def b(x):
            return jets.as_jet(bc, x) * (x[2] + x[3] ** 2)

        data = BihermitianData.build(Ip, Im, g, b, m=4)
        J, _, G = gk_from_bihermitian(data)
        for p in rng.uniform(-1, 1, size=(10, 4)):
            Ip_r, Im_r, g_r, b_r = bihermitian_from_gk(J.value(p), G.value(p))
            x = jets.variable(p, 0)
            assert np.abs(Ip_r - Ip).max() < 1e-8
            assert np.abs(Im_r - Im).max() < 1e-8
            assert np.abs(g_r - data.g(x).v).max() < 1e-8
            assert np.abs(b_r - data.b(x).v).max() < 1e-8


class TestEigenbundle:
    def test_symplectic_graph(self):
        w = wedge_basis(2, 0, 1)
        L = eigenbundle(from_symplectic(w), [0.0, 0.0])
        Q = pairing_matrix(2)
        assert L.dim == 2
        assert np.abs(L.basis.T @ Q @ L.basis).max() < 1e-14
        # L = {X - i omega(X)}
        graph = span([np.concatenate([e, -1j * w.T @ e]) for e in np.eye(2)])
        assert subspace_equal(L, graph)[0]

    def test_matches_eigen_solver(self, rng):
        g = random_spd(rng, 4)
        Ip, Im = random_hermitian_complex(rng, g), random_hermitian_complex(rng, g)
        Jv = gk_pair(Ip, Im, g, random_antisymmetric(rng, 4))
        assert subspace_equal(eigenbundle(Jv), eigenbundle_eig(Jv))[0]

    def test_complex_structure_splitting(self):
        L = eigenbundle(from_complex(I2), [0.0, 0.0])
        # d/dz-bar = (d/dx + i d/dy)/2 and dz = dx + i dy
        assert L.contains(np.array([1, 1j, 0, 0]))
        assert L.contains(np.array([0, 0, 1, 1j]))
        assert not L.contains(np.array([0, 0, 1, -1j]))

    def test_transversality(self, rng):
        for _ in range(5):
            g = random_spd(rng, 4)
            Jv = gk_pair(random_hermitian_complex(rng, g), random_hermitian_complex(rng, g), g,
                         random_antisymmetric(rng, 4))
            L = eigenbundle(Jv)
            assert L.dim == 4
            assert intersect(L, L.conj()).dim == 0

    def test_rejects_non_complex(self):
        with pytest.raises(StructureError):
            eigenbundle(np.eye(4))


class TestIntegrability:
    def test_constant_symplectic(self, rng):
        w = wedge_basis(4, 0, 1) + wedge_basis(4, 2, 3) + 0.3 * random_antisymmetric(rng, 4)
        J = from_symplectic(w)
        assert integrability_residual(J, rng.uniform(-1, 1, 4)) < 1e-12

    def test_nonclosed_symplectic(self):
        def w(x):
            return jets.as_jet(wedge_basis(4, 0, 1), x) + jets.as_jet(wedge_basis(4, 2, 3), x) * x[0]

        J = from_symplectic(form_field(w, 4, 2))
        assert integrability_residual(J, [1.3, 0.2, -0.4, 0.5]) > 1e-3

    def test_nonconstant_symplectic(self):
        # (1 + x3^2) dx1^dx2 is not closed, (1 + x2^2) dx1^dx2 is
        def w(x):
            return jets.as_jet(wedge_basis(4, 0, 1), x) * (1.0 + x[2] ** 2) + jets.as_jet(wedge_basis(4, 2, 3), x)

        def w_closed(x):
            return jets.as_jet(wedge_basis(4, 0, 1), x) * (1.0 + x[1] ** 2) + jets.as_jet(wedge_basis(4, 2, 3), x)

        J = from_symplectic(form_field(w_closed, 4, 2))
        assert integrability_residual(J, [0.3, 0.2, -0.4, 0.5]) < 1e-12
        assert integrability_residual(from_symplectic(form_field(w, 4, 2)), [0.3, 0.2, -0.4, 0.5]) > 1e-3

    def test_constant_complex(self, rng):
        I = random_hermitian_complex(rng, np.eye(4))
        assert integrability_residual(from_complex(I), rng.uniform(-1, 1, 4)) < 1e-12

    def test_almost_complex_rotating_in_a_mixed_plane(self):
        # rotating in the (x2, x3) plane mixes the complex lines and breaks integrability
        fn = _rotated_complex((1, 2))
        p = np.array([0.4, 0.1, -0.2, 0.3])
        oracle = nijenhuis_tm(lambda q: fn(jets.variable(q, 0)).v, p)
        assert np.abs(oracle).max() > 1e-2
        assert integrability_residual(from_complex(fn, m=4), p) > 1e-4

    def test_rotation_inside_a_complex_line_is_constant(self):
        fn = _rotated_complex((0, 1))
        p = np.array([0.4, 0.1, -0.2, 0.3])
        assert np.allclose(fn(jets.variable(p, 0)).v, I4)
        assert integrability_residual(from_complex(fn, m=4), p) < 1e-12

    def test_poisson_bivector(self):
        pi = wedge_basis(2, 0, 1)
        assert integrability_residual(dirac_graph_bivector(pi), [0.5, 0.5]) < 1e-12

    def test_linear_poisson_structure_in_third_coordinate(self):
        # x3 d1^d2 + d1^d3 satisfies the Jacobi identity
        def pi(x):
            return jets.as_jet(wedge_basis(3, 0, 1), x) * x[2] + jets.as_jet(wedge_basis(3, 0, 2), x)

        res = integrability_residual(dirac_graph_bivector(pi, m=3), [0.2, -0.3, 0.7])
        assert res < 1e-12

    def test_non_poisson_bivector(self):
        # x1 d1^d2 + d1^d3 has Jacobiator -1
        def pi(x):
            return jets.as_jet(wedge_basis(3, 0, 1), x) * x[0] + jets.as_jet(wedge_basis(3, 0, 2), x)

        assert integrability_residual(dirac_graph_bivector(pi, m=3), [0.2, -0.3, 0.7]) > 1e-4

    def test_residual_is_tensorial_in_the_frame(self):
        def pi(x):
            return jets.as_jet(wedge_basis(3, 0, 1), x) * x[2] + jets.as_jet(wedge_basis(3, 0, 2), x)

        L = dirac_graph_bivector(pi, m=3)
        A = lambda x: jets.as_jet(np.eye(6), x) * (2.0 + jets.sin(x[0] * x[1])) + jets.as_jet(np.triu(np.ones((6, 6))), x) * x[2]
        twisted = st.DiracField(st.as_field(lambda x: L(x) @ A(x), 3))
        p = [0.2, -0.3, 0.7]
        assert integrability_residual(twisted, p) < 1e-12

    def test_closed_graph_form(self):
        assert integrability_residual(dirac_graph_form(wedge_basis(3, 0, 1)), [0.0, 0.0, 0.0]) < 1e-12

    def test_twist_obstructs_closed_symplectic(self):
        H = constant_field(wedge_basis(4, 0, 1, 2), 4, "form", 3)
        J = from_symplectic(wedge_basis(4, 0, 1) + wedge_basis(4, 2, 3))
        assert integrability_residual(J, np.zeros(4)) < 1e-14
        assert integrability_residual(J, np.zeros(4), H) > 0.1

    def test_metric_has_no_integrability(self):
        with pytest.raises(TypeError):
            integrability_residual(metric_from(np.eye(2)), [0.0, 0.0])


class TestReports:
    def test_kahler_passes(self, rng):
        g = random_spd(rng, 4)
        I = random_hermitian_complex(rng, g)
        J, _, G = gk_from_bihermitian(BihermitianData.build(I, I, g))
        rep = check_gk(J, G, rng.uniform(-1, 1, size=(3, 4)))
        assert rep.passed, rep.failures

    def test_hyperkahler_passes(self, rng):
        J1, J2, J3 = (from_complex(-q) for q in (Q1, Q2, Q3))
        rep = check_ghk(J1, J2, J3, metric_from(np.eye(4)), rng.uniform(-1, 1, size=(3, 4)))
        assert rep.passed, rep.failures

    def test_incompatible_symplectic_form(self):
        J = from_symplectic(2 * wedge_basis(2, 0, 1))
        rep = check_gk(J, metric_from(np.eye(2)), [[0.1, 0.2]])
        assert not rep.passed
        assert "commute" in rep.failures
        assert rep.residuals["commute"] > 0.1


class TestDcResidual:
    def test_kahler(self):
        assert dc_form_residual(BihermitianData.build(I4, I4, np.eye(4)), [0.3, 0.1, 0.2, 0.0]) == 0.0

    def test_flat_hyperkahler(self):
        assert dc_form_residual(BihermitianData.build(Q1, Q2, np.eye(4)), [0.3, 0.1, 0.2, 0.0]) == 0.0

    def test_scaled_factor_is_detected(self):
        def g(x):
            s = 1.0 + x[0]
            zero = x[0] * 0.0
            return jets.stack([jets.stack([zero + 1, zero, zero, zero]), jets.stack([zero, zero + 1, zero, zero]),
                               jets.stack([zero, zero, s, zero]), jets.stack([zero, zero, zero, s])])

        data = BihermitianData.build(I4, I4, g, m=4)
        assert dc_form_residual(data, [0.2, 0.1, -0.3, 0.4]) > 1e-5

    def test_closed_b_field_leaves_residual_zero(self):
        data = BihermitianData.build(I4, I4, np.eye(4), wedge_basis(4, 0, 2))
        assert dc_form_residual(data, np.zeros(4)) == 0.0
