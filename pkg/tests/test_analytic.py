import math

import numpy as np
import pytest

from basketspan import analytic
from basketspan.analytic import QuadratureError, QuadratureSpec
from basketspan.payoff import PayoffSpec, eval_payoff


def G(d, x, k):
    return eval_payoff(PayoffSpec("GaussianExample", d, k), x)


class TestQuadratureSpec:
    @pytest.mark.parametrize("bad", [dict(T=0.0), dict(tol=0.0), dict(max_subdivisions=0), dict(rule="simpson")])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            QuadratureSpec(**bad)

    def test_error_carries_estimate(self):
        q = QuadratureSpec(T=1.0, tol=1e-14, max_subdivisions=1)
        with pytest.raises(QuadratureError) as info:
            analytic.adaptive_quad(lambda x: math.sin(200 * x) ** 2, 0.0, 1.0, q)
        assert math.isfinite(info.value.estimate) and info.value.abserr > 1e-14


class TestFourier:
    @pytest.mark.parametrize("c, r, expected", [(0.0, 1.0, 0.0), (math.pi, 1.0, 4.0), (1.0, 2.0, 0.5 - 0.5 * math.cos(2.0))])
    def test_values(self, c, r, expected):
        assert analytic.basket_call_ft(c, r) == pytest.approx(expected, abs=1e-15)

    def test_singular(self):
        with pytest.raises(ValueError):
            analytic.basket_call_ft(1.0, 0.0)

    @pytest.mark.parametrize("c", [1.3, -0.4, 0.0])
    def test_integral(self, c):
        assert abs(analytic.basket_call_ft_integral(c) - 2 * math.pi * abs(c)) <= 1e-6


class TestGaussianSolutions:
    def test_origin_values(self):
        assert analytic.g_solution(1, [0.0]) == -1.0
        assert analytic.g_solution(2, [0.0, 0.0]) == pytest.approx(-2 / math.sqrt(math.pi))
        assert analytic.g_solution(3, [0.0, 0.0, 0.0]) == pytest.approx(-3 / math.pi)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_even(self, d):
        rng = np.random.default_rng(42)
        for w in rng.normal(size=(20, d)):
            assert analytic.g_solution(d, w) == analytic.g_solution(d, -w)

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            analytic.g_solution(4, np.zeros(4))

    def test_zero_mass(self):
        q = QuadratureSpec()
        assert abs(analytic.adaptive_quad(analytic.g1, -q.T, q.T, q)) <= 1e-10

    def test_second_moment_stable(self):
        f = lambda w: w * w * abs(analytic.g1(w))
        pts = [-1 / math.sqrt(2), 1 / math.sqrt(2)]
        a = analytic.adaptive_quad(f, -20, 20, QuadratureSpec(T=20.0), points=pts)
        b = analytic.adaptive_quad(f, -40, 40, QuadratureSpec(T=40.0), points=pts)
        assert abs(a - b) <= 1e-10

    def test_grid_csv(self):
        rows = analytic.g_grid_csv(2, n=3).splitlines()
        assert rows[0] == "w_1,w_2,g" and len(rows) == 10


class TestSpanning:
    @pytest.mark.parametrize("x, k", [(1.0, 1.0), (-2.5, 0.3), (0.4, -1.1), (3.0, 0.0)])
    def test_d1(self, x, k):
        assert abs(analytic.span_quadrature_gaussian(1, [x], k) - G(1, [x], k)) <= 1e-6

    def test_d1_origin(self):
        assert analytic.span_quadrature_gaussian(1, [0.0], 0.5) == 0.0

    def test_d2(self):
        assert abs(analytic.span_quadrature_gaussian(2, [1.0, 0.5], 0.7) - G(2, [1.0, 0.5], 0.7)) <= 1e-4

    def test_even_in_x_and_k(self):
        a = analytic.span_quadrature_gaussian(1, [1.3], 0.6)
        assert analytic.span_quadrature_gaussian(1, [-1.3], -0.6) == pytest.approx(a, abs=1e-9)

    def test_envelope(self):
        with pytest.raises(ValueError):
            analytic.span_quadrature_gaussian(1, [11.0], 1.0)


class TestDispersionAndCarrMadan:
    @pytest.mark.parametrize("x, k, expected", [(2.0, 1.0, 1.0), (-2.0, 1.0, 1.0), (0.3, 1.0, 0.0)])
    def test_dispersion(self, x, k, expected):
        assert analytic.dispersion_d1_span(x, k) == expected

    def test_density(self):
        assert analytic.carr_madan_density(0.0) == -2.0
        w = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(analytic.carr_madan_density(w), 2 * analytic.g1(w))

    @pytest.mark.parametrize("x, k", [(1.2, 1.0), (0.7, 0.2), (-1.5, -0.8)])
    def test_carr_madan(self, x, k):
        assert abs(analytic.carr_madan_integral(x, k) - G(1, [x], k)) <= 1e-6
