"""Goal annotation, plan execution, and trajectory serialization.

A trajectory is the state sequence obtained by executing a valid plan on a
goal-annotated task: for every predicate ``p`` mentioned in the goal, a static
copy ``p-goal`` is added to the domain, and every goal atom ``(p a b)`` is
asserted as ``(p-goal a b)`` in the initial state.  This keeps the goal
visible inside every state of the trajectory so downstream state functions
can refer to it.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace

from . import pddl
from .errors import (
    FingerprintMismatchError,
    GoalNotReachedError,
    PlanExecutionError,
    SchemaError,
    UnsupportedGoalError,
    ValidationError,
)
from .pddl import DomainDef, GroundTask, Predicate, ProblemDef, TypedName

GOAL_SUFFIX = "-goal"


# ---------------------------------------------------------------------------
# Goal annotation
# ---------------------------------------------------------------------------


def annotate_task(domain: DomainDef, problem: ProblemDef) -> tuple[DomainDef, ProblemDef]:
    """Add static goal-marker predicates and facts.

    Only positive conjunctive goals are supported.  The returned domain
    declares ``p-goal`` for every predicate ``p`` used in the goal; the
    returned problem asserts the goal atoms under those markers in ``:init``.
    The goal itself is left untouched.
    """
    goal_preds = []
    for lit in problem.goal:
        if not lit.positive:
            raise UnsupportedGoalError(
                f"goal literal (not ({lit.pred} ...)) is not supported; "
                "only positive conjunctive goals can be annotated"
            )
        if lit.pred not in goal_preds:
            goal_preds.append(lit.pred)

    new_predicates = dict(domain.predicates)
    for pname in goal_preds:
        marker = pname + GOAL_SUFFIX
        if marker in domain.predicates:
            raise ValidationError(
                f"cannot annotate goals: predicate {marker!r} already exists"
            )
        base = domain.predicates[pname]
        new_predicates[marker] = Predicate(marker, base.params)

    new_domain = replace(domain, predicates=new_predicates)
    marker_atoms = {(lit.pred + GOAL_SUFFIX, *lit.args) for lit in problem.goal}
    new_problem = replace(problem, init=problem.init | marker_atoms)
    return new_domain, new_problem


def annotate_and_ground(domain: DomainDef, problem: ProblemDef, **kwargs) -> GroundTask:
    new_domain, new_problem = annotate_task(domain, problem)
    return pddl.ground(new_domain, new_problem, **kwargs)


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

_CALL_RE = re.compile(r"^([\w][\w\-]*)\s*\(([^)]*)\)$")


def parse_plan(text: str) -> tuple[str, ...]:
    """Parse a plan file: one action per line, ``;`` comments ignored.

    Accepts both ``(move t1 a b)`` and ``move(t1, a, b)`` notations and
    normalizes to the former.
    """
    steps = []
    for raw in text.splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        steps.append(normalize_action_name(line))
    return tuple(steps)


def normalize_action_name(text: str) -> str:
    text = text.strip().lower()
    if text.startswith("("):
        parts = text.lstrip("(").rstrip(")").split()
        if not parts:
            raise ValidationError("empty action name")
        return "(" + " ".join(parts) + ")"
    match = _CALL_RE.match(text)
    if match:
        name = match.group(1)
        args = [a.strip() for a in match.group(2).split(",") if a.strip()]
        return "(" + " ".join([name, *args]) + ")"
    # bare whitespace-separated form: move t1 a b
    parts = text.split()
    return "(" + " ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """A plan execution trace: states[0] is the initial state, and
    states[i] results from applying plan[i-1] to states[i-1]."""

    task_id: str
    objects: tuple[TypedName, ...]
    plan: tuple[str, ...]
    states: tuple[frozenset[str], ...]

    def __len__(self) -> int:
        return len(self.states)


def execute_plan(task: GroundTask, plan, task_id: str) -> Trajectory:
    """Run a plan on a ground task; the final state must satisfy the goal."""
    steps = tuple(normalize_action_name(a) for a in plan)
    state = task.init
    states = [state]
    for step_index, name in enumerate(steps):
        action = task.action_index.get(name)
        if action is None:
            raise PlanExecutionError(
                f"unknown action {name}", step=step_index, task_id=task_id
            )
        if not pddl.applicable(state, action):
            raise PlanExecutionError(
                f"action {name} is inapplicable", step=step_index, task_id=task_id
            )
        state = pddl.apply(state, action)
        states.append(state)
    if not pddl.goal_satisfied(state, task):
        raise GoalNotReachedError(
            "plan execution ended in a non-goal state",
            step=len(steps),
            task_id=task_id,
        )
    objects = tuple(
        sorted(tuple(task.problem.objects) + tuple(task.domain.constants),
               key=lambda o: o.name)
    )
    return Trajectory(
        task_id=task_id,
        objects=objects,
        plan=steps,
        states=tuple(task.state_to_atoms(s) for s in states),
    )


# ---------------------------------------------------------------------------
# Trajectory sets and their JSON form
# ---------------------------------------------------------------------------


def domain_fingerprint(domain: DomainDef) -> str:
    """SHA-256 over the canonical printed form of the domain."""
    canonical = pddl.domain_to_pddl(domain)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TrajectorySet:
    """All training trajectories for one (annotated) domain."""

    domain: DomainDef
    trajectories: tuple[Trajectory, ...]
    fingerprint: str = field(default="")

    def __post_init__(self):
        if not self.fingerprint:
            object.__setattr__(self, "fingerprint", domain_fingerprint(self.domain))

    def to_json(self) -> dict:
        return {
            "domain_fingerprint": self.fingerprint,
            "domain": pddl.domain_to_pddl(self.domain),
            "trajectories": [
                {
                    "task_id": t.task_id,
                    "objects": [[o.name, o.type] for o in t.objects],
                    "plan": list(t.plan),
                    "states": [sorted(state) for state in t.states],
                }
                for t in self.trajectories
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.dumps())


def _require(mapping, key, kind, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = mapping[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: key {key!r} has wrong type")
    return value


def trajectory_set_from_json(data) -> TrajectorySet:
    fingerprint = _require(data, "domain_fingerprint", str, "trajectory set")
    domain_text = _require(data, "domain", str, "trajectory set")
    raw_trajs = _require(data, "trajectories", list, "trajectory set")

    domain = pddl.parse_domain(domain_text)
    actual = domain_fingerprint(domain)
    if actual != fingerprint:
        raise FingerprintMismatchError(
            f"domain fingerprint mismatch: file says {fingerprint[:12]}..., "
            f"domain hashes to {actual[:12]}..."
        )

    trajectories = []
    for i, raw in enumerate(raw_trajs):
        where = f"trajectory[{i}]"
        task_id = _require(raw, "task_id", str, where)
        objects = tuple(
            TypedName(pair[0], pair[1])
            for pair in _require(raw, "objects", list, where)
        )
        plan = tuple(_require(raw, "plan", list, where))
        states_raw = _require(raw, "states", list, where)
        if len(states_raw) != len(plan) + 1:
            raise SchemaError(f"{where}: expected {len(plan) + 1} states")
        states = tuple(frozenset(state) for state in states_raw)
        trajectories.append(Trajectory(task_id, objects, plan, states))

    return TrajectorySet(
        domain=domain, trajectories=tuple(trajectories), fingerprint=fingerprint
    )


def load_trajectory_set(path) -> TrajectorySet:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return trajectory_set_from_json(data)
