import pytest

from vswtsim import Scenario, TurbineParams


@pytest.fixture(scope="session")
def params() -> TurbineParams:
    return TurbineParams()


@pytest.fixture()
def ramp_scenario() -> Scenario:
    return Scenario(
        wind_profile=((0.0, 5.0), (150.0, 20.0)),
        duration=150.0,
        dt=1e-3,
        model="one-mass",
    )
