import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sgbasket.market import MarketParams, OptionSpec

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# filled by test_acceptance, printed after the run so each criterion gets
# one visible pass/fail line even under output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def make_market(d, rho=0.5, vol=0.2, rate=0.03, dividend=0.0, spot=100.0):
    corr = np.full((d, d), rho)
    np.fill_diagonal(corr, 1.0)
    return MarketParams(
        spot=np.full(d, spot),
        rate=rate,
        dividend=np.full(d, dividend),
        vol=np.full(d, vol),
        corr=corr,
    )


@pytest.fixture
def market_d2():
    return make_market(2)


@pytest.fixture
def market_d3():
    return make_market(3)


@pytest.fixture
def geo_put_k10():
    return OptionSpec(kind="geometric_put", strike=100.0, maturity=0.25, exercise_count=10)


@pytest.fixture
def geo_put_k50():
    return OptionSpec(kind="geometric_put", strike=100.0, maturity=0.25, exercise_count=50)
