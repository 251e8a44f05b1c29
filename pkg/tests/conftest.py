"""
Test configuration and fixtures for svicert tests.

This module sets up pytest configuration and common fixtures
used across the test suite.
"""

import pytest
import os
import sys

import numpy as np

# Add the project root to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from svicert.models import (  # noqa: E402
    GroundSet,
    ProblemInstance,
    RandomAffineMap,
    ScenarioModel,
)

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def example1_problem(kind: str = "SCP") -> ProblemInstance:
    """M = [[2, 1], [1, 2]], q(ω) = (-2 + ω1, -4 + ω2), ω = ±(1, 1) with probability ½ each."""
    mapping = RandomAffineMap(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([-2.0, -4.0]),
                              offset_omega=np.eye(2))
    scenarios = ScenarioModel.finite([[1.0, 1.0], [-1.0, -1.0]], [0.5, 0.5])
    return ProblemInstance(kind, GroundSet.orthant(2), mapping, scenarios, name="example1")


def affine_problem(M, q, kind: str = "SCP", ground_set=None, scenarios=None, offset_omega=None) -> ProblemInstance:
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=float)
    ground_set = ground_set or GroundSet.orthant(q.size)
    scenarios = scenarios or ScenarioModel.single([0.0])
    return ProblemInstance(kind, ground_set, RandomAffineMap(M, q, offset_omega=offset_omega), scenarios)


@pytest.fixture
def example1():
    return example1_problem()


@pytest.fixture
def example1_svi():
    return example1_problem("SVI")


@pytest.fixture
def anti_monotone():
    return affine_problem(-np.eye(2), [1.0, 1.0])


@pytest.fixture
def cournot_config():
    from svicert.storage import read_cournot_config
    return read_cournot_config(data_path("cournot.config.json"))


@pytest.fixture
def cournot_capacity_config():
    from svicert.storage import read_cournot_config
    return read_cournot_config(data_path("cournot_capacity.config.json"))


@pytest.fixture
def power_monopoly_config():
    from svicert.storage import read_power_config
    return read_power_config(data_path("power_monopoly.config.json"))


@pytest.fixture
def power_two_node_config():
    from svicert.storage import read_power_config
    return read_power_config(data_path("power_two_node.config.json"))


@pytest.fixture
def rng():
    return np.random.default_rng(20130917)
