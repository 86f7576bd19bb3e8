"""Shared fixtures: the grid-delivery domain, its worked-example and
training trajectory sets, and feature tables derived from them."""

from __future__ import annotations

import pytest

from loopmark import delivery
from loopmark.features import model_states_from_trajectories, parse_feature
from loopmark.search import make_helper, plan
from loopmark.statefns import FunctionTable
from loopmark.trajectory import TrajectorySet, annotate_and_ground, execute_plan


def solve_annotated(domain, problem, helper="hadd", **kwargs):
    """Ground with goal markers, solve, and return (task, actions, stats)."""
    task = annotate_and_ground(domain, problem)
    actions, stats = plan(task, make_helper(helper, task), **kwargs)
    return task, actions, stats


@pytest.fixture(scope="session")
def domain():
    return delivery.domain()


@pytest.fixture(scope="session")
def example_set(domain):
    """The three worked-example instances with their pinned plans."""
    trajs = []
    annotated = None
    for name, problem in delivery.example_problems().items():
        task = annotate_and_ground(domain, problem)
        annotated = task.domain
        trajs.append(execute_plan(task, delivery.EXAMPLE_PLANS[name], task_id=name))
    return TrajectorySet(domain=annotated, trajectories=tuple(trajs))


@pytest.fixture(scope="session")
def training_set(domain):
    """The five handcrafted training instances solved with the HAdd helper."""
    trajs = []
    annotated = None
    for name, problem in delivery.training_problems().items():
        task, actions, stats = solve_annotated(domain, problem)
        assert stats.status == "solved", f"{name} must be solvable"
        annotated = task.domain
        trajs.append(execute_plan(task, actions, task_id=name))
    return TrajectorySet(domain=annotated, trajectories=tuple(trajs))


@pytest.fixture(scope="session")
def hand_features():
    return tuple(parse_feature(text) for text in delivery.HAND_FEATURES)


@pytest.fixture(scope="session")
def hand_table(example_set, hand_features):
    """Hand-picked feature valuations over the worked-example trajectories."""
    states = model_states_from_trajectories(
        example_set.trajectories, example_set.domain
    )
    return FunctionTable.from_features(hand_features, states)


@pytest.fixture(scope="session")
def training_hand_table(training_set, hand_features):
    states = model_states_from_trajectories(
        training_set.trajectories, training_set.domain
    )
    return FunctionTable.from_features(hand_features, states)
