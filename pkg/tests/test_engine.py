"""Backward recursion engine: bounds, monotonicity, determinism, surfaces."""

import numpy as np
import pytest

from sgbasket.engine import PricingConfig, PricingEngine, price
from sgbasket.errors import ConfigError, FeasibilityError, ResourceCapError
from sgbasket.market import OptionSpec, payoff
from sgbasket.oracles import european_put_closed_form, geometric_reduction
from sgbasket.quadrature import QuadratureConfig
from sgbasket.transform import TransformConfig

from conftest import make_market

GK4 = QuadratureConfig(kind="gk_sparse", level=4)


def run(market, option, level=4, quad=GK4, **kw):
    return price(market, option, PricingConfig(interp_level=level, quadrature=quad, **kw))


class TestBasics:
    def test_price_within_bounds(self, market_d2, geo_put_k10):
        res = run(market_d2, geo_put_k10)
        immediate = payoff(geo_put_k10, market_d2.spot[None, :])[0]
        assert immediate <= res.price <= geo_put_k10.strike
        assert res.price == max(res.immediate_exercise, res.continuation_origin)

    def test_deep_itm_floors_at_exercise(self):
        m = make_market(2, spot=40.0)
        opt = OptionSpec("geometric_put", 100.0, 0.25, 4)
        res = run(m, opt)
        assert res.price >= res.immediate_exercise > 59.0

    def test_monotone_in_exercise_count(self, market_d2):
        # more exercise rights cannot lose value.  Needs a rule whose error
        # stays well under the K-to-K value gaps at every step size; a dense
        # axis along the dominant factor (where the equicorrelated geometric
        # kink lives) does that, the sparse rules do not at K = 1.
        quad = QuadratureConfig(kind="gh_tensor", nodes=(4096, 5))
        prices = []
        for k in (1, 2, 5, 10, 25):
            opt = OptionSpec("geometric_put", 100.0, 0.25, k)
            prices.append(run(market_d2, opt, quad=quad).price)
        diffs = np.diff(prices)
        assert np.all(diffs >= -1e-6), prices

    def test_arithmetic_at_least_geometric(self, market_d2, geo_put_k10):
        geo = run(market_d2, geo_put_k10).price
        ari = run(
            market_d2, OptionSpec("arithmetic_put", 100.0, 0.25, 10)
        ).price
        # gmean <= mean pointwise, so the geometric put dominates the
        # arithmetic one
        assert geo >= ari - 1e-9

    def test_single_step_matches_european(self, market_d2):
        opt = OptionSpec("geometric_put", 100.0, 0.25, 1)
        red = geometric_reduction(market_d2, opt)
        ref = european_put_closed_form(
            red.spot, red.strike, red.rate, red.dividend, red.vol, red.maturity
        )
        # K = 1 skips interpolation entirely, so only quadrature error is
        # left.  The payoff kink over one quarter-year step caps the sparse
        # rule near 1e-2; a dense rule along the dominant factor, where the
        # kink lives under equicorrelation, gets 1e-4.
        coarse = run(market_d2, opt, level=3)
        assert abs(coarse.price - ref) <= 2e-2 * ref
        fine = run(
            market_d2,
            opt,
            level=3,
            quad=QuadratureConfig(kind="gh_tensor", nodes=(4096, 3)),
        )
        assert abs(fine.price - ref) <= 5e-4 * ref

    def test_result_diagnostics(self, market_d2, geo_put_k10):
        res = run(market_d2, geo_put_k10, level=3)
        assert res.dim == 2 and res.exercise_count == 10
        assert res.n_inner < res.n_grid
        assert res.m_points == 173
        assert res.feasibility_margin > 0
        assert res.min_bubble > res.bubble_floor
        assert len(res.step_seconds) == 10


class TestDeterminism:
    def test_rerun_bit_identical(self, market_d3, geo_put_k10):
        a = run(market_d3, geo_put_k10)
        b = run(market_d3, geo_put_k10)
        assert a.price == b.price
        assert a.continuation_origin == b.continuation_origin

    def test_thread_count_bit_identical(self, market_d3, geo_put_k10):
        base = run(market_d3, geo_put_k10, level=5, chunk=16_384, threads=1)
        for threads in (4, 8):
            out = run(market_d3, geo_put_k10, level=5, chunk=16_384, threads=threads)
            assert out.price == base.price

    def test_mc_seed_determinism(self, market_d2, geo_put_k10):
        mc = lambda s: QuadratureConfig(kind="mc", samples=2000, seed=s)
        a = run(market_d2, geo_put_k10, quad=mc(5))
        b = run(market_d2, geo_put_k10, quad=mc(5))
        c = run(market_d2, geo_put_k10, quad=mc(6))
        assert a.price == b.price
        assert a.price != c.price


class TestGuards:
    def test_feasibility_error(self, market_d2, geo_put_k10):
        # near-one floor leaves no room for any boundary decay
        cfg = PricingConfig(
            interp_level=4,
            quadrature=GK4,
            transform=TransformConfig(bubble_floor=0.9),
        )
        with pytest.raises(FeasibilityError):
            PricingEngine(market_d2, geo_put_k10, cfg).price()

    def test_pair_cap(self, market_d2, geo_put_k10):
        with pytest.raises(ResourceCapError):
            run(market_d2, geo_put_k10, pair_cap=100)

    def test_point_cap(self, market_d2, geo_put_k10):
        with pytest.raises(ResourceCapError):
            run(market_d2, geo_put_k10, point_cap=10)


class TestSurfaces:
    def test_boundary_rows_exactly_zero(self, market_d2, geo_put_k10):
        eng = PricingEngine(
            market_d2,
            geo_put_k10,
            PricingConfig(interp_level=4, quadrature=GK4, retain_surfaces=True),
        )
        eng.price()
        boundary = ~eng.grid.inner_mask
        for k in range(geo_put_k10.exercise_count):
            assert np.all(eng._surfaces[k][boundary] == 0.0)

    def test_origin_probe_matches_recursion(self, market_d2, geo_put_k10):
        eng = PricingEngine(
            market_d2,
            geo_put_k10,
            PricingConfig(interp_level=4, quadrature=GK4, retain_surfaces=True),
        )
        res = eng.price()
        probe = eng.continuation_surface(0, np.zeros((1, 2)))
        assert abs(probe[0] - res.continuation_origin) <= 1e-12

    def test_surface_requires_retention(self, market_d2, geo_put_k10):
        eng = PricingEngine(
            market_d2, geo_put_k10, PricingConfig(interp_level=3, quadrature=GK4)
        )
        eng.price()
        with pytest.raises(ConfigError):
            eng.continuation_surface(0, np.zeros((1, 2)))

    def test_surface_validation(self, market_d2, geo_put_k10):
        eng = PricingEngine(
            market_d2,
            geo_put_k10,
            PricingConfig(interp_level=3, quadrature=GK4, retain_surfaces=True),
        )
        eng.price()
        with pytest.raises(ConfigError):
            eng.continuation_surface(99, np.zeros((1, 2)))
        with pytest.raises(ConfigError):
            eng.continuation_surface(0, np.array([[1.0, 0.0]]))  # on the boundary

    def test_continuation_nonnegative_near_origin(self, market_d2, geo_put_k10):
        eng = PricingEngine(
            market_d2,
            geo_put_k10,
            PricingConfig(interp_level=5, quadrature=GK4, retain_surfaces=True),
        )
        eng.price()
        rng = np.random.default_rng(1)
        probes = rng.uniform(-0.5, 0.5, size=(100, 2))
        vals = eng.continuation_surface(3, probes)
        assert np.all(vals > -1e-9)
