import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genred import calculus as cal
from genred import jets
from genred.calculus import (axioms_residual, b_transform, constant_field, courant_bracket,
                             exterior_derivative, form_field, pairing, random_polynomial_field,
                             section, section_field, splitting_curvature, vector_field,
                             wedge_basis)

from helpers import fd_exterior, plain


def _const_section(v):
    v = np.asarray(v, float)
    return constant_field(v, v.size // 2, "section")


class TestForms:
    def test_wedge_basis_is_antisymmetric(self):
        w = wedge_basis(4, 0, 2, 3)
        assert w[0, 2, 3] == 1.0 and w[2, 0, 3] == -1.0 and w[3, 2, 0] == -1.0
        assert np.count_nonzero(w) == 6

    def test_random_forms_are_antisymmetric(self, rng):
        f = random_polynomial_field(rng, 4, "form", 3, form_degree=3)
        v = f.value(rng.uniform(-1, 1, 4))
        assert np.allclose(v, -np.swapaxes(v, 0, 1))
        assert np.allclose(v, -np.swapaxes(v, 1, 2))

    def test_form_map_round_trip(self, rng):
        a = rng.standard_normal((3, 3))
        a = a - a.T
        assert np.array_equal(cal.map_to_form(cal.form_to_map(a)), a)


class TestPairing:
    def test_vector_against_covector(self):
        assert pairing(_const_section([1, 0, 0, 0]), _const_section([0, 0, 1, 0]), [0.2, -3.0]) == 1.0

    def test_self_pairing(self):
        e = _const_section([1, 0, 1, 0])
        assert pairing(e, e, [5.0, 1.0]) == 2.0

    def test_matches_dot_product(self, rng):
        a, b = rng.standard_normal((2, 6))
        expected = b[3:] @ a[:3] + a[3:] @ b[:3]
        got = pairing(_const_section(a), _const_section(b), np.zeros(3))
        assert got == pytest.approx(expected, abs=1e-14)

    def test_chart_mismatch(self):
        with pytest.raises(ValueError):
            pairing(_const_section([1, 0]), _const_section([1, 0, 0, 0]), [0.0])


class TestExteriorDerivative:
    def test_coordinate_function(self):
        d = exterior_derivative(cal.scalar_field(lambda x: x[0], 3))
        assert np.allclose(d.value([0.4, 1.0, 2.0]), [1, 0, 0])
        assert d.degree == 1 and d.kind == "form"

    def test_leibniz_example(self):
        alpha = form_field(lambda x: x[0] * jets.as_jet(np.eye(3)[1], x), 3, 1)
        d = exterior_derivative(alpha).value([0.7, -0.1, 0.3])
        assert np.allclose(d, wedge_basis(3, 0, 1))

    def test_d_squared_vanishes(self, rng):
        B = form_field(lambda x: jets.sin(x[0]) * jets.as_jet(wedge_basis(3, 1, 2), x), 3, 2)
        ddB = exterior_derivative(exterior_derivative(B))
        for p in rng.uniform(-3, 3, size=(50, 3)):
            assert np.abs(ddB.value(p)).max() < 1e-9

    def test_against_finite_differences(self, rng):
        for k in (0, 1, 2):
            alpha = random_polynomial_field(rng, 4, "form" if k else "scalar", 3, form_degree=k)
            p = rng.uniform(-1, 1, 4)
            assert np.allclose(exterior_derivative(alpha).value(p), fd_exterior(plain(alpha), p), atol=1e-7)

    def test_degree_limit(self):
        with pytest.raises(ValueError):
            exterior_derivative(cal.zero_form(5, 4))


class TestCourantBracket:
    def test_constant_sections_commute(self):
        dx, dy = _const_section([1, 0, 0, 0, 0, 0]), _const_section([0, 1, 0, 0, 0, 0])
        assert np.abs(courant_bracket(dx, dy).value([1.0, 2.0, 3.0])).max() == 0.0

    def test_twist_by_volume_form(self):
        H = constant_field(wedge_basis(3, 0, 1, 2), 3, "form", 3)
        dx, dy = _const_section([1, 0, 0, 0, 0, 0]), _const_section([0, 1, 0, 0, 0, 0])
        got = courant_bracket(dx, dy, H).value([0.3, 0.1, -0.4])
        assert np.allclose(got, [0, 0, 0, 0, 0, 1])

    def test_lie_derivative_example(self):
        dx = _const_section([1, 0, 0, 0])
        f = section(None, form_field(lambda x: jets.stack([x[0] * 0.0, x[0]]), 2, 1))
        got = courant_bracket(dx, f).value([0.5, -2.0])
        assert np.allclose(got, [0, 0, 0, 1])

    def test_frozen_polynomial_values(self):
        # independently evaluated symbolically at p = (3/10, -1/2, 7/10), H = (1+x1) dx1^dx2^dx3
        def e1(x):
            return jets.stack([x[1], x[0] * x[2], x[0] ** 0, x[1] ** 2, x[0] * 0.0, x[0]])

        def e2(x):
            return jets.stack([x[2] ** 2, x[0] * 0.0, x[0] * x[1], x[0] * 0.0, x[0] ** 2 * x[2], x[1]])

        H = form_field(lambda x: (1.0 + x[0]) * jets.as_jet(wedge_basis(3, 0, 1, 2), x), 3, 3)
        got = courant_bracket(section_field(e1, 3), section_field(e2, 3), H).value([0.3, -0.5, 0.7])
        expected = [7 / 5, -149 / 500, 313 / 1000, -2937 / 20000, -141 / 2000, -39487 / 100000]
        assert np.allclose(got, expected, rtol=0, atol=1e-14)

    def test_exact_forms_are_in_the_kernel(self, rng):
        phi = random_polynomial_field(rng, 3, "scalar", 3)
        e = random_polynomial_field(rng, 3, "section", 3)
        dphi = section(None, exterior_derivative(phi))
        for p in rng.uniform(-1, 1, size=(10, 3)):
            assert np.abs(courant_bracket(dphi, e).value(p)).max() < 1e-11


class TestBTransform:
    def test_zero_is_identity(self, rng):
        e = random_polynomial_field(rng, 3, "section", 2)
        p = rng.uniform(-1, 1, 3)
        assert np.array_equal(b_transform(e, cal.zero_form(3, 2)).value(p), e.value(p))

    def test_interior_example(self):
        B = constant_field(wedge_basis(2, 0, 1), 2, "form", 2)
        got = b_transform(_const_section([1, 0, 0, 0]), B).value([0.0, 0.0])
        assert np.allclose(got, [1, 0, 0, 1])

    def test_inverse(self, rng):
        B = random_polynomial_field(rng, 3, "form", 2, form_degree=2)
        e = random_polynomial_field(rng, 3, "section", 2)
        p = rng.uniform(-1, 1, 3)
        back = b_transform(b_transform(e, B), B, sign=-1.0)
        assert np.allclose(back.value(p), e.value(p), atol=1e-13)

    def test_pairing_and_bracket_preserved_for_closed_b(self, rng):
        H = exterior_derivative(random_polynomial_field(rng, 3, "form", 2, form_degree=2, scale=0.5))
        B = exterior_derivative(random_polynomial_field(rng, 3, "form", 3, form_degree=1, scale=0.5))
        for _ in range(10):
            e1, e2 = (random_polynomial_field(rng, 3, "section", 3, scale=0.5) for _ in range(2))
            p = rng.uniform(-1, 1, 3)
            lhs = courant_bracket(b_transform(e1, B), b_transform(e2, B), H).value(p)
            rhs = b_transform(courant_bracket(e1, e2, H), B).value(p)
            assert np.abs(lhs - rhs).max() < 1e-9
            assert pairing(b_transform(e1, B), b_transform(e2, B), p) == pytest.approx(pairing(e1, e2, p), abs=1e-12)

    def test_non_closed_b_changes_the_bracket(self):
        B = form_field(lambda x: x[2] * jets.as_jet(wedge_basis(3, 0, 1), x), 3, 2)
        dx, dy = _const_section([1, 0, 0, 0, 0, 0]), _const_section([0, 1, 0, 0, 0, 0])
        lhs = courant_bracket(b_transform(dx, B), b_transform(dy, B)).value([0.1, 0.2, 0.3])
        assert np.allclose(lhs, [0, 0, 0, 0, 0, 1])  # the dB = dz contribution


class TestAxioms:
    def test_constant_sections_zero_twist(self, rng):
        es = [_const_section(rng.standard_normal(8)) for _ in range(3)]
        f = constant_field(2.0, 4, "scalar")
        res = axioms_residual(None, *es, f, rng.uniform(-1, 1, 4))
        assert res.max() == 0.0

    def test_closed_twist_random_sections(self, rng):
        H = constant_field(wedge_basis(4, 0, 1, 2), 4, "form", 3)
        worst = 0.0
        for _ in range(30):
            e1, e2, e3 = (random_polynomial_field(rng, 4, "section", 3, scale=0.5) for _ in range(3))
            f = random_polynomial_field(rng, 4, "scalar", 3, scale=0.5)
            worst = max(worst, axioms_residual(H, e1, e2, e3, f, rng.uniform(-1, 1, 4)).max())
        assert worst < 1e-8

    def test_nonclosed_twist_breaks_only_the_jacobi_identity(self, rng):
        H = cal.nonclosed_twist(4)
        e1, e2, e3 = (random_polynomial_field(rng, 4, "section", 2) for _ in range(3))
        f = random_polynomial_field(rng, 4, "scalar", 2)
        res = axioms_residual(H, e1, e2, e3, f, rng.uniform(-1, 1, 4))
        assert res.C1 > 1e-3
        assert max(res.C2, res.C3, res.C4, res.C5) < 1e-9

    def test_suite_report_shape(self):
        rep = cal.axiom_suite(seed=3, twist="zero", samples=3)
        assert rep["pass"] is True
        assert set(rep["max_residuals"]) == {"C1", "C2", "C3", "C4", "C5", "b_transform", "ker_ad", "dH"}
        with pytest.raises(ValueError):
            cal.axiom_suite(twist="bogus", samples=1)


class TestSplittingCurvature:
    def _fields(self, rng, m=3):
        return [random_polynomial_field(rng, m, "vector", 2) for _ in range(3)]

    def test_zero_b_gives_h0(self, rng):
        X, Y, Z = self._fields(rng)
        H0 = random_polynomial_field(rng, 3, "form", 2, form_degree=3)
        p = rng.uniform(-1, 1, 3)
        expected = np.einsum("abc,a,b,c->", H0.value(p), X.value(p), Y.value(p), Z.value(p))
        got = splitting_curvature(cal.zero_form(3, 2), H0, X, Y, Z, p)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_coordinate_b(self, rng):
        X, Y, Z = self._fields(rng)
        B = form_field(lambda x: x[0] * jets.as_jet(wedge_basis(3, 1, 2), x), 3, 2)
        vol = wedge_basis(3, 0, 1, 2)
        for p in rng.uniform(-1, 1, size=(5, 3)):
            expected = np.einsum("abc,a,b,c->", vol, X.value(p), Y.value(p), Z.value(p))
            assert splitting_curvature(B, None, X, Y, Z, p) == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_curvature_is_h0_plus_db(self, seed):
        r = np.random.default_rng(seed)
        m = 4
        X, Y, Z = (random_polynomial_field(r, m, "vector", 2) for _ in range(3))
        B = random_polynomial_field(r, m, "form", 3, form_degree=2)
        H0 = random_polynomial_field(r, m, "form", 2, form_degree=3)
        p = r.uniform(-1, 1, m)
        total = H0.value(p) + fd_exterior(plain(B), p)
        expected = np.einsum("abc,a,b,c->", total, X.value(p), Y.value(p), Z.value(p))
        got = splitting_curvature(B, H0, X, Y, Z, p)
        assert got == pytest.approx(expected, abs=1e-6 * (1 + abs(expected)))
