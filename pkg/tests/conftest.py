from pathlib import Path

import numpy as np
import pytest

from app.models.trajectory import Trajectory
from app.services.scenario_services import ScenarioService

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def default_scenario():
    return ScenarioService.with_overrides(ScenarioService.default_scenario(), rng_seed=7)


@pytest.fixture
def coarse_scenario(default_scenario):
    """Five IRSs, one-second slots, 40 slots"""
    return ScenarioService.coarse(default_scenario)


@pytest.fixture
def short_scenario(default_scenario):
    """Five IRSs, one-second slots, 10 slots"""
    return ScenarioService.with_overrides(default_scenario, T=10.0, delta=1.0)


@pytest.fixture
def two_irs_scenario(default_scenario):
    """Two asymmetric IRSs, one-second slots, 10 slots"""
    return ScenarioService.with_overrides(
        default_scenario,
        T=10.0,
        delta=1.0,
        irs_pos=((30.0, 30.0), (-40.0, 0.0)),
        weights=(1.0, 1.0),
    )


@pytest.fixture
def hovering_scenario(two_irs_scenario):
    """Two IRSs with the UAV unable to move"""
    return ScenarioService.with_overrides(two_irs_scenario, V_max=0.0)


@pytest.fixture
def hover_trajectory():
    """Factory for a trajectory parked at one point"""

    def build(s, point):
        return Trajectory(q=np.tile(np.asarray(point, dtype=float), (s.N + 1, 1)), delta=s.delta)

    return build


@pytest.fixture
def scenario_file():
    return REPO_ROOT / 'scenarios' / 'default.json'
