"""One-dimensional reference pricers and the geometric reduction."""

import numpy as np
import pytest

from sgbasket.errors import ConfigError
from sgbasket.market import MarketParams, OptionSpec
from sgbasket.oracles import (
    Reduced1D,
    bermudan_put_1d,
    binomial_put_bermudan,
    european_put_closed_form,
    geometric_reduction,
    reference_price,
)

from conftest import make_market


@pytest.fixture
def reduced_k10(market_d2, geo_put_k10):
    return geometric_reduction(market_d2, geo_put_k10)


class TestReduction:
    def test_equicorrelated_basket(self, market_d3):
        opt = OptionSpec("geometric_put", 100.0, 0.25, 10)
        red = geometric_reduction(market_d3, opt)
        d = 3
        cov = market_d3.covariance()
        var = cov.sum() / d**2
        assert abs(red.vol - np.sqrt(var)) < 1e-15
        assert abs(red.spot - 100.0) < 1e-12
        # effective dividend keeps the reduced forward consistent with the
        # basket's geometric mean
        mean_drift = np.mean(market_d3.dividend + 0.5 * market_d3.vol**2)
        assert abs(red.dividend - (mean_drift - 0.5 * var)) < 1e-15

    def test_heterogeneous_spots(self):
        m = MarketParams(
            spot=np.array([90.0, 110.0]),
            rate=0.03,
            dividend=np.array([0.01, 0.02]),
            vol=np.array([0.15, 0.3]),
            corr=np.array([[1.0, 0.4], [0.4, 1.0]]),
        )
        opt = OptionSpec("geometric_put", 100.0, 0.5, 8)
        red = geometric_reduction(m, opt)
        assert abs(red.spot - np.sqrt(90.0 * 110.0)) < 1e-12
        assert red.exercise_count == 8

    def test_rejects_arithmetic(self, market_d2):
        opt = OptionSpec("arithmetic_put", 100.0, 0.25, 10)
        with pytest.raises(ConfigError):
            geometric_reduction(market_d2, opt)


class TestEuropean:
    def test_within_static_bounds(self):
        p = european_put_closed_form(100.0, 100.0, 0.03, 0.0, 0.2, 1.0)
        assert 0.0 < p < 100.0 * np.exp(-0.03)

    def test_put_call_parity_via_forward(self):
        # deep ITM put converges to discounted strike minus forward
        p = european_put_closed_form(1e-8, 100.0, 0.03, 0.0, 0.2, 1.0)
        assert abs(p - 100.0 * np.exp(-0.03)) < 1e-6

    def test_monotone_in_vol(self):
        ps = [
            european_put_closed_form(100.0, 100.0, 0.03, 0.0, v, 0.5)
            for v in (0.1, 0.2, 0.4)
        ]
        assert ps[0] < ps[1] < ps[2]

    def test_zero_vol_limit(self):
        p = european_put_closed_form(120.0, 100.0, 0.03, 0.0, 1e-12, 0.5)
        assert abs(p) < 1e-9


class TestBermudan1D:
    def test_k1_matches_closed_form(self, market_d2):
        opt = OptionSpec("geometric_put", 100.0, 0.25, 1)
        red = geometric_reduction(market_d2, opt)
        ref = european_put_closed_form(
            red.spot, red.strike, red.rate, red.dividend, red.vol, red.maturity
        )
        got = bermudan_put_1d(red, node_level=9, quad_points=48)
        assert abs(got - ref) <= 1e-8 * ref

    def test_nondecreasing_in_exercise_count(self, market_d2):
        prices = []
        for k in (1, 2, 5, 10, 25):
            red = geometric_reduction(
                market_d2, OptionSpec("geometric_put", 100.0, 0.25, k)
            )
            prices.append(bermudan_put_1d(red, node_level=9, quad_points=48))
        assert np.all(np.diff(prices) >= -1e-7), prices

    def test_above_european_below_strike(self, reduced_k10):
        euro = european_put_closed_form(
            reduced_k10.spot,
            reduced_k10.strike,
            reduced_k10.rate,
            reduced_k10.dividend,
            reduced_k10.vol,
            reduced_k10.maturity,
        )
        berm = bermudan_put_1d(reduced_k10, node_level=9, quad_points=48)
        assert euro - 1e-9 <= berm <= reduced_k10.strike

    def test_binomial_cross_check(self, reduced_k10):
        grid = bermudan_put_1d(reduced_k10, node_level=9, quad_points=48)
        tree = binomial_put_bermudan(reduced_k10, tree_steps=20_000)
        # two unrelated discretizations; the tree oscillates at ~1e-4
        assert abs(grid - tree) <= 1e-3 * grid

    def test_reference_price_reports_convergence(self, reduced_k10):
        out = reference_price(reduced_k10, tol=1e-6)
        assert out.converged
        assert out.delta <= 1e-6
        direct = bermudan_put_1d(reduced_k10, out.node_level, out.quad_points)
        assert out.price == direct

    def test_validation(self):
        red = Reduced1D(
            spot=100.0,
            strike=100.0,
            rate=0.03,
            dividend=0.0,
            vol=0.2,
            maturity=0.25,
            exercise_count=10,
        )
        with pytest.raises(ConfigError):
            bermudan_put_1d(red, node_level=0)
        with pytest.raises(ConfigError):
            bermudan_put_1d(red, quad_points=0)
