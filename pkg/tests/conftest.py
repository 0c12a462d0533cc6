import copy
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from leolora.config import default_scenario_dict, parse_scenario

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def default_dict():
    return default_scenario_dict()


@pytest.fixture
def scenario_dict(default_dict):
    return copy.deepcopy(default_dict)


@pytest.fixture(scope="session")
def default_scenario():
    return parse_scenario(default_scenario_dict())


def make_scenario(base: dict, **overrides) -> "ScenarioConfig":
    """Deep-copy `base` and apply {'section.key': value} overrides."""
    d = copy.deepcopy(base)
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        d[section][key] = value
    return parse_scenario(d)
