import numpy as np
import pytest

from racestrat.config import RaceConfig, toy_config

CHECKPOINT = "checkpoints/default_57lap.pt"
NOMINAL_SOLUTION = "artifacts/nominal_solution.json"


@pytest.fixture(scope="session")
def cfg() -> RaceConfig:
    return RaceConfig()


@pytest.fixture(scope="session")
def toy_cfg() -> RaceConfig:
    return toy_config(10)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_oracle(toy_cfg):
    """Exhaustive optimum of the 10-lap race, shared across tests."""
    from racestrat.minlp import build_ocp, exhaustive_oracle

    return exhaustive_oracle(build_ocp(toy_cfg), max_stops=2)
