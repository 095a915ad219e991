"""Market parameter validation, decorrelation, and payoff behaviour."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgbasket.errors import ConfigError, NumericalError
from sgbasket.market import MarketParams, OptionSpec, decorrelate, payoff, prices_from_rotated

from conftest import make_market


def random_spd_corr(rng, d):
    # random correlation via normalized Gram matrix; the ridge keeps it away
    # from singular
    a = rng.standard_normal((d, d + 2))
    g = a @ a.T + 0.05 * d * np.eye(d)
    s = np.sqrt(np.diag(g))
    return g / np.outer(s, s)


class TestValidation:
    def test_rejects_shape_mismatch(self):
        with pytest.raises(ConfigError):
            MarketParams(
                spot=np.array([100.0, 100.0]),
                rate=0.03,
                dividend=np.zeros(3),
                vol=np.array([0.2, 0.2]),
                corr=np.eye(2),
            )

    def test_rejects_nonpositive_spot(self):
        with pytest.raises(ConfigError):
            make_market(2, spot=0.0)

    def test_rejects_corr_out_of_range(self):
        with pytest.raises(ConfigError):
            make_market(2, rho=1.2)

    def test_rejects_asymmetric_corr(self):
        corr = np.array([[1.0, 0.3], [0.5, 1.0]])
        with pytest.raises(ConfigError):
            MarketParams(
                spot=np.full(2, 100.0),
                rate=0.03,
                dividend=np.zeros(2),
                vol=np.full(2, 0.2),
                corr=corr,
            )

    def test_rejects_singular_corr(self):
        # eigenvalue 1 + 2*rho = 0; caught at decomposition time
        with pytest.raises(ConfigError):
            decorrelate(make_market(3, rho=-0.5))

    def test_option_validation(self):
        with pytest.raises(ConfigError):
            OptionSpec(kind="geometric_put", strike=-1.0, maturity=0.25, exercise_count=10)
        with pytest.raises(ConfigError):
            OptionSpec(kind="lookback", strike=100.0, maturity=0.25, exercise_count=10)
        with pytest.raises(ConfigError):
            OptionSpec(kind="geometric_put", strike=100.0, maturity=0.25, exercise_count=0)


class TestDecorrelate:
    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=10_000))
    def test_reconstruction(self, d, seed):
        rng = np.random.default_rng(seed)
        corr = random_spd_corr(rng, d)
        vol = rng.uniform(0.05, 0.6, size=d)
        m = MarketParams(
            spot=rng.uniform(50.0, 150.0, size=d),
            rate=0.02,
            dividend=np.zeros(d),
            vol=vol,
            corr=corr,
        )
        rot = decorrelate(m)
        cov = np.diag(vol) @ corr @ np.diag(vol)
        rebuilt = rot.rotation @ np.diag(rot.variances) @ rot.rotation.T
        assert np.max(np.abs(rebuilt - cov)) <= 1e-12 * max(1.0, np.max(np.abs(cov)))

    def test_variances_descending_positive(self, market_d3):
        rot = decorrelate(market_d3)
        assert np.all(np.diff(rot.variances) <= 0)
        assert rot.variances[-1] > 0

    def test_rotation_orthonormal(self, market_d3):
        q = decorrelate(market_d3).rotation
        assert np.allclose(q.T @ q, np.eye(3), atol=1e-13)

    def test_sign_canonical(self, market_d3):
        # largest-|.| entry of each column positive, so the rotation does not
        # depend on LAPACK sign conventions
        q = decorrelate(market_d3).rotation
        for j in range(q.shape[1]):
            i = np.argmax(np.abs(q[:, j]))
            assert q[i, j] > 0

    def test_drift_definition(self, market_d3):
        rot = decorrelate(market_d3)
        m = market_d3
        raw = m.rate - m.dividend - 0.5 * m.vol**2
        assert np.allclose(rot.drift, rot.rotation.T @ raw, atol=1e-15)


class TestPrices:
    @given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=10_000))
    def test_roundtrip(self, d, seed):
        rng = np.random.default_rng(seed)
        m = make_market(d, rho=0.3, vol=0.25)
        rot = decorrelate(m)
        x = rng.standard_normal((7, d))
        s = prices_from_rotated(rot, x)
        x_back = np.log(s / m.spot) @ rot.rotation
        assert np.allclose(x_back, x, atol=1e-10)

    def test_overflow_guard(self, market_d2):
        rot = decorrelate(market_d2)
        with pytest.raises(NumericalError):
            prices_from_rotated(rot, np.full((1, 2), 4000.0))

    def test_dimension_check(self, market_d2):
        rot = decorrelate(market_d2)
        with pytest.raises(ConfigError):
            prices_from_rotated(rot, np.zeros((3, 5)))


class TestPayoff:
    @given(
        st.lists(st.floats(min_value=1.0, max_value=500.0), min_size=2, max_size=6),
        st.floats(min_value=10.0, max_value=300.0),
    )
    def test_bounded_and_nonnegative(self, prices, strike):
        s = np.array([prices])
        for kind in ("arithmetic_put", "geometric_put"):
            spec = OptionSpec(kind=kind, strike=strike, maturity=0.25, exercise_count=1)
            h = payoff(spec, s)
            assert h.shape == (1,)
            assert 0.0 <= h[0] <= strike

    def test_lipschitz_in_mean(self):
        # |(k-a)^+ - (k-b)^+| <= |a-b|; the arithmetic payoff inherits this
        # through the basket mean
        rng = np.random.default_rng(7)
        spec = OptionSpec(kind="arithmetic_put", strike=100.0, maturity=0.25, exercise_count=1)
        s = rng.uniform(40.0, 160.0, size=(100, 4))
        h0 = payoff(spec, s)
        h1 = payoff(spec, s + 1.0)
        assert np.all(np.abs(h1 - h0) <= 1.0 + 1e-12)

    def test_geometric_pays_at_least_arithmetic(self):
        # AM-GM: gmean <= mean, so the geometric put dominates
        rng = np.random.default_rng(8)
        s = rng.uniform(40.0, 160.0, size=(50, 5))
        ha = payoff(OptionSpec("arithmetic_put", 100.0, 0.25, 1), s)
        hg = payoff(OptionSpec("geometric_put", 100.0, 0.25, 1), s)
        assert np.all(hg >= ha - 1e-12)

    def test_known_values(self):
        s = np.array([[80.0, 120.0]])
        assert payoff(OptionSpec("arithmetic_put", 100.0, 0.25, 1), s)[0] == 0.0
        g = 100.0 - np.sqrt(80.0 * 120.0)
        assert abs(payoff(OptionSpec("geometric_put", 100.0, 0.25, 1), s)[0] - g) < 1e-12
