"""1D quadrature rules and nodal bases."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swedg.quadrature import (NodalBasis1D, flux_quadrature_for_degree,
                              gauss_legendre, gauss_lobatto_nodes)


class TestGaussLegendre:
    def test_weights_sum_to_interval_length(self):
        for n in range(1, 12):
            rule = gauss_legendre(n)
            assert rule.weights.sum() == pytest.approx(2.0, abs=1e-14)
            assert np.all(rule.weights > 0)

    def test_points_sorted_and_symmetric(self):
        for n in range(2, 10):
            rule = gauss_legendre(n)
            assert np.all(np.diff(rule.points) > 0)
            np.testing.assert_allclose(rule.points, -rule.points[::-1],
                                       atol=1e-14)

    @given(n=st.integers(1, 9), k=st.integers(0, 17))
    @settings(max_examples=60, deadline=None)
    def test_exactness_degree_2n_minus_1(self, n, k):
        if k > 2 * n - 1:
            return
        rule = gauss_legendre(n)
        approx = np.sum(rule.weights * rule.points ** k)
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert approx == pytest.approx(exact, abs=1e-13)

    def test_three_point_rule_reference_values(self):
        rule = gauss_legendre(3)
        np.testing.assert_allclose(rule.points,
                                   [-np.sqrt(3 / 5), 0.0, np.sqrt(3 / 5)],
                                   atol=1e-15)
        np.testing.assert_allclose(rule.weights, [5 / 9, 8 / 9, 5 / 9],
                                   atol=1e-15)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            gauss_legendre(0)


class TestGaussLobatto:
    def test_endpoints_included(self):
        for r in range(1, 9):
            nodes = gauss_lobatto_nodes(r)
            assert len(nodes) == r + 1
            assert nodes[0] == -1.0 and nodes[-1] == 1.0
            assert np.all(np.diff(nodes) > 0)

    def test_degree_three_interior_nodes(self):
        # interior Lobatto nodes for r=3 are the roots of P_3' at +-1/sqrt(5)
        nodes = gauss_lobatto_nodes(3)
        np.testing.assert_allclose(nodes,
                                   [-1.0, -1 / np.sqrt(5), 1 / np.sqrt(5), 1.0],
                                   atol=1e-14)

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            gauss_lobatto_nodes(0)


class TestFluxQuadrature:
    def test_point_counts(self):
        # floor(3r/2) + 1 points
        assert flux_quadrature_for_degree(1).n == 2
        assert flux_quadrature_for_degree(2).n == 4
        assert flux_quadrature_for_degree(3).n == 5
        assert flux_quadrature_for_degree(4).n == 7

    def test_exactness_3r(self):
        for r in (1, 2, 3, 4):
            rule = flux_quadrature_for_degree(r)
            k = 3 * r - (3 * r) % 2     # highest even monomial <= 3r
            approx = np.sum(rule.weights * rule.points ** k)
            assert approx == pytest.approx(2.0 / (k + 1), abs=1e-13)


class TestNodalBasis:
    def test_cardinality(self):
        for r in (1, 2, 3, 4):
            basis = NodalBasis1D(r)
            V = basis.eval(basis.nodes)
            np.testing.assert_allclose(V, np.eye(r + 1), atol=1e-13)

    def test_partition_of_unity(self):
        basis = NodalBasis1D(3)
        x = np.linspace(-1, 1, 23)
        np.testing.assert_allclose(basis.eval(x).sum(axis=1), 1.0, atol=1e-13)

    def test_reproduces_polynomials(self):
        basis = NodalBasis1D(3)
        coeffs = basis.nodes ** 3 - 2.0 * basis.nodes
        x = np.linspace(-1, 1, 17)
        np.testing.assert_allclose(basis.eval(x) @ coeffs, x ** 3 - 2 * x,
                                   atol=1e-13)

    def test_derivative_against_finite_differences(self):
        basis = NodalBasis1D(4)
        x = np.linspace(-0.95, 0.95, 11)
        eps = 1e-6
        fd = (basis.eval(x + eps) - basis.eval(x - eps)) / (2 * eps)
        np.testing.assert_allclose(basis.eval_deriv(x), fd, atol=1e-8)

    def test_derivative_at_nodes(self):
        # the analytic barycentric path at support points
        basis = NodalBasis1D(3)
        D = basis.diff_matrix()
        coeffs = basis.nodes ** 2
        np.testing.assert_allclose(D @ coeffs, 2 * basis.nodes, atol=1e-13)

    def test_piecewise_constant(self):
        basis = NodalBasis1D.piecewise_constant()
        assert basis.n == 1
        np.testing.assert_allclose(basis.eval([-0.3, 0.7]), 1.0)
        np.testing.assert_allclose(basis.eval_deriv([0.2]), 0.0)
