import json
from importlib import resources

import pytest

from fabricsnn.learning import LearningConfig, learn
from fabricsnn.netlist import (
    TruthTable,
    WeightAssignment,
    build_reference_network,
    parse_network,
)

#: The stock 3-input/2-output target the reference hardware computes.
TARGET_ROWS = {
    "000": "00", "001": "00", "010": "10", "011": "11",
    "100": "00", "101": "10", "110": "11", "111": "11",
}


def data_text(name: str) -> str:
    return (resources.files("fabricsnn") / "data" / name).read_text()


@pytest.fixture(scope="session")
def reference_network():
    return build_reference_network()


@pytest.fixture(scope="session")
def target_table():
    return TruthTable(TARGET_ROWS)


@pytest.fixture(scope="session")
def reference_config():
    return json.loads(data_text("reference_config.json"))


@pytest.fixture(scope="session")
def shipped_weights():
    return WeightAssignment.from_json(data_text("reference_weights.json"))


@pytest.fixture(scope="session")
def shipped_network():
    return parse_network(data_text("reference_network.json"))


@pytest.fixture(scope="session")
def learned_result(reference_network, target_table, reference_config):
    """The pinned learning run that produced the shipped reference weights."""
    config = LearningConfig(**reference_config)
    return learn(reference_network, target_table, config)
