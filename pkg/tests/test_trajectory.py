"""Goal annotation, plan execution, and trajectory-set serialization."""

import json

import pytest

from loopmark import delivery
from loopmark.errors import (
    FingerprintMismatchError,
    GoalNotReachedError,
    PlanExecutionError,
    SchemaError,
    UnsupportedGoalError,
    ValidationError,
)
from loopmark.pddl import domain_to_pddl, parse_domain, parse_problem
from loopmark.trajectory import (
    annotate_and_ground,
    annotate_task,
    domain_fingerprint,
    execute_plan,
    parse_plan,
    trajectory_set_from_json,
)


def test_annotate_adds_goal_markers(domain):
    problem = delivery.example_problems()["ex1"]
    new_domain, new_problem = annotate_task(domain, problem)
    assert "at-goal" in new_domain.predicates
    assert new_domain.predicates["at-goal"].params == new_domain.predicates["at"].params
    assert ("at-goal", "p0", "c-1-0") in new_problem.init
    assert new_problem.goal == problem.goal
    # only goal-used predicates gain markers
    assert "carrying-goal" not in new_domain.predicates


def test_annotate_rejects_negative_goal(domain):
    text = """(define (problem p) (:domain delivery)
      (:objects t1 - truck c - cell)
      (:init (at t1 c)) (:goal (and (not (at t1 c)))))"""
    problem = parse_problem(text, domain)
    with pytest.raises(UnsupportedGoalError):
        annotate_task(domain, problem)


def test_annotate_rejects_marker_collision():
    dom = parse_domain(
        """(define (domain d)
             (:predicates (p ?x - object) (p-goal ?x - object))
             (:action a :parameters (?x - object)
               :precondition (and) :effect (and (p ?x))))"""
    )
    prob = parse_problem(
        """(define (problem q) (:domain d) (:objects o - object)
             (:init) (:goal (and (p o))))""",
        dom,
    )
    with pytest.raises(ValidationError, match="p-goal"):
        annotate_task(dom, prob)


def test_goal_markers_visible_in_every_state(example_set):
    for traj in example_set.trajectories:
        markers = {a for a in traj.states[0] if a.startswith("(at-goal")}
        assert markers, "annotated trajectories must carry goal markers"
        for state in traj.states:
            assert markers <= state


def test_example_trajectory_lengths(example_set):
    lengths = {t.task_id: len(t.states) for t in example_set.trajectories}
    assert lengths == {"ex1": 5, "ex2": 9, "ex3": 13}
    for traj in example_set.trajectories:
        assert len(traj.plan) == len(traj.states) - 1


def test_execute_plan_rejects_unknown_action(domain):
    problem = delivery.example_problems()["ex1"]
    task = annotate_and_ground(domain, problem)
    with pytest.raises(PlanExecutionError) as err:
        execute_plan(task, ["(fly t1 c-0-0 c-1-1)"], task_id="ex1")
    assert err.value.step == 0
    assert err.value.task_id == "ex1"


def test_execute_plan_rejects_inapplicable_action(domain):
    problem = delivery.example_problems()["ex1"]
    task = annotate_and_ground(domain, problem)
    plan = list(delivery.EXAMPLE_PLANS["ex1"])
    plan[0], plan[1] = plan[1], plan[0]  # pick up before reaching the cell
    with pytest.raises(PlanExecutionError, match="inapplicable"):
        execute_plan(task, plan, task_id="ex1")


def test_execute_plan_requires_goal(domain):
    problem = delivery.example_problems()["ex1"]
    task = annotate_and_ground(domain, problem)
    with pytest.raises(GoalNotReachedError):
        execute_plan(task, delivery.EXAMPLE_PLANS["ex1"][:-1], task_id="ex1")


def test_parse_plan_accepts_common_notations():
    text = """
    ; solver: whatever
    (move t1 c-0-0 c-0-1)
    move(t1, c-0-1, c-1-1)   ; call syntax
    MOVE t1 c-1-1 c-1-0

    ; expanded=42
    """
    assert parse_plan(text) == (
        "(move t1 c-0-0 c-0-1)",
        "(move t1 c-0-1 c-1-1)",
        "(move t1 c-1-1 c-1-0)",
    )


def test_trajectory_set_round_trip(example_set):
    data = json.loads(example_set.dumps())
    restored = trajectory_set_from_json(data)
    assert restored.fingerprint == example_set.fingerprint
    assert [t.task_id for t in restored.trajectories] == ["ex1", "ex2", "ex3"]
    for a, b in zip(restored.trajectories, example_set.trajectories):
        assert a.plan == b.plan
        assert a.states == b.states
        assert a.objects == b.objects


def test_fingerprint_validated_on_load(example_set):
    data = json.loads(example_set.dumps())
    data["domain_fingerprint"] = "0" * 64
    with pytest.raises(FingerprintMismatchError):
        trajectory_set_from_json(data)


def test_schema_errors_on_malformed_payload(example_set):
    data = json.loads(example_set.dumps())
    del data["trajectories"]
    with pytest.raises(SchemaError):
        trajectory_set_from_json(data)


def test_fingerprint_is_canonical(domain):
    # fingerprints survive a print/parse round trip of the domain
    reparsed = parse_domain("\n;; a comment\n" + domain_to_pddl(domain))
    assert domain_fingerprint(reparsed) == domain_fingerprint(domain)
