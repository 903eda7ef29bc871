import math

import pytest

from paircredit import CdsContract, FirmParams, FtdContract, MarketParams

# Reference scenario used throughout: y0 = 0.8 / 1.2, sigma = 0.2 / 0.3,
# r = 5%, rho = 0.4, T = 5y, s = 200bp, recoveries 40%.


@pytest.fixture(scope="session")
def firm1():
    return FirmParams(v0=math.exp(0.8), k_barrier=1.0, gamma=0.0, sigma=0.2, payout=0.0)


@pytest.fixture(scope="session")
def firm2():
    return FirmParams(v0=math.exp(1.2), k_barrier=1.0, gamma=0.0, sigma=0.3, payout=0.0)


@pytest.fixture(scope="session")
def market():
    return MarketParams(r=0.05, rho=0.4)


@pytest.fixture(scope="session")
def cds():
    return CdsContract(
        notional=1.0,
        recovery_underlying=0.4,
        recovery_counterparty=0.4,
        spread=0.02,
        maturity=5.0,
    )


@pytest.fixture(scope="session")
def ftd():
    return FtdContract(notional=1.0, recovery=0.4, maturity=5.0)
