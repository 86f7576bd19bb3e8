"""Best-first planning with relaxation, goal-count, and landmark-graph
counting heuristics.

The planner is greedy best-first by default (f = h, FIFO tie-breaking); an
A* mode (f = g + h, unit costs) is available behind a flag.  Heuristics
share one calling convention: ``evaluate(state, prev_state)`` where states
are frozensets of ground-atom indices.  The landmark-graph heuristic is
path-dependent — it keeps one record per visited state, copied from the
predecessor's record on first evaluation — so one heuristic instance serves
exactly one search.

Relaxation heuristics run on the delete relaxation over positive atoms:
negative preconditions and negative goal literals are invisible to them
(they still constrain the actual search through successor generation and
the goal test).
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

from . import _kernels
from .discovery import LandmarkGraph
from .errors import (
    CounterDisagreementError,
    GraphInapplicableError,
    PlanExecutionError,
)
from .features import ModelState, parse_feature
from .pddl import GroundTask, apply as pddl_apply, goal_satisfied
from .statefns import DECREASE

# ---------------------------------------------------------------------------
# Helper heuristics
# ---------------------------------------------------------------------------


class RelaxationHeuristic:
    """Additive (``mode="add"``) or max (``mode="max"``) relaxed goal cost."""

    def __init__(self, task: GroundTask, mode: str, backend=None):
        self.mode = mode
        self.num_atoms = len(task.atoms)
        self.core = _kernels.make_relaxation_core(task, mode, backend)
        self.last_traversal = False

    def evaluate(self, state, prev_state=None) -> float:
        return self.core.value(_kernels.state_mask(self.num_atoms, state))


class GoalCountHeuristic:
    """Number of goal literals violated in the state."""

    def __init__(self, task: GroundTask):
        self.goal = tuple(task.goal)
        self.goal_neg = tuple(task.goal_neg)
        self.last_traversal = False

    def evaluate(self, state, prev_state=None) -> float:
        missing = sum(1 for atom in self.goal if atom not in state)
        violated = sum(1 for atom in self.goal_neg if atom in state)
        return float(missing + violated)


def make_helper(name: str, task: GroundTask, backend=None):
    if name == "hadd":
        return RelaxationHeuristic(task, "add", backend)
    if name == "hmax":
        return RelaxationHeuristic(task, "max", backend)
    if name == "goalcount":
        return GoalCountHeuristic(task)
    raise ValueError(f"unknown helper heuristic {name!r}")


# ---------------------------------------------------------------------------
# Landmark-graph counting heuristic
# ---------------------------------------------------------------------------


@dataclass
class _Record:
    """Path-dependent walk state attached to one search state."""

    counter: int
    next_node: int
    remaining: dict  # loop from_node -> traversals left
    prev_loop: dict  # loop from_node -> feature values at its last acceptance


@dataclass
class LMGContext:
    """Numbers fixed by the graph + initial state, plus the visited map."""

    h_max: int
    loop_counts: dict  # from_node -> expected acceptance count c
    records: dict = field(default_factory=dict)  # state -> _Record
    forced_advances: int = 0


def _task_objects(task: GroundTask):
    return tuple(
        sorted(
            tuple(task.problem.objects) + tuple(task.domain.constants),
            key=lambda o: o.name,
        )
    )


class LMGHeuristic:
    """Landmark-acceptance countdown along the search path.

    ``h(state) = h_max - landmarks accepted on the path to state``, where
    ``h_max`` counts every chain node once plus ``c - 1`` extra acceptances
    for each node on a loop's span, ``c`` being the loop counter's value in
    the initial state.  After evaluating a successor, ``last_traversal``
    tells whether that evaluation walked a loop edge backwards (the
    planner's pruning hook).
    """

    def __init__(self, graph: LandmarkGraph, task: GroundTask):
        self.graph = graph
        self.task = task
        self.objects = _task_objects(task)
        self.features = {
            name: parse_feature(name) for name in graph.feature_names()
        }
        self.nodes = [
            tuple((d.feature, d.positive) for d in node.sorted_descriptors())
            for node in graph.nodes
        ]
        self.edges = {}
        for edge in graph.loop_edges:
            self.edges[edge.from_node] = (
                tuple((d.feature, d.positive) for d in edge.sorted_exit()),
                tuple((p.feature, p.direction) for p in edge.sorted_progression()),
                tuple(edge.sorted_counter()),
                edge.to_node,
            )
        self.last_traversal = False

        init_values = self._values(task.init)
        loop_counts, remaining0 = {}, {}
        covered = set()
        for from_node, (exit_d, _, counter_names, to_node) in self.edges.items():
            span = range(to_node, from_node + 1)
            if covered & set(span):
                raise GraphInapplicableError("loop spans overlap")
            covered.update(span)
            counts = {init_values[name] for name in counter_names}
            if len(counts) != 1:
                raise CounterDisagreementError(
                    f"counter features disagree in the initial state: {sorted(counts)}"
                )
            c = counts.pop()
            if c == 0:
                # A zero counter admits exactly one pass over the loop body,
                # and only when the walk would leave the loop immediately.
                if all((init_values[n] > 0) == sign for n, sign in exit_d):
                    c = 1
                else:
                    raise GraphInapplicableError(
                        "loop counter is zero in the initial state but the "
                        "exit condition does not hold there"
                    )
            loop_counts[from_node] = c
            remaining0[from_node] = max(c - 1, 0)
        h_max = sum(
            loop_counts[f] * (f - self.edges[f][3] + 1) for f in self.edges
        ) + (len(self.nodes) - len(covered))
        self.context = LMGContext(h_max=h_max, loop_counts=loop_counts)
        self._remaining0 = remaining0
        self.context.records[task.init] = _Record(
            counter=0, next_node=0, remaining=dict(remaining0), prev_loop={}
        )

    @property
    def h_max(self) -> int:
        return self.context.h_max

    def _values(self, state) -> dict:
        atoms = frozenset(self.task.atom_str(i) for i in state)
        model = ModelState(atoms, self.objects, self.task.domain)
        return {name: f.evaluate(model) for name, f in self.features.items()}

    def evaluate(self, state, prev_state) -> float:
        self.last_traversal = False
        records = self.context.records
        record = records.get(state)
        if record is not None:  # visited: reuse the first evaluation
            return float(self.context.h_max - record.counter)
        parent = records[prev_state]
        counter, next_node = parent.counter, parent.next_node
        remaining = dict(parent.remaining)
        prev_loop = dict(parent.prev_loop)
        if next_node < len(self.nodes):
            values = self._values(state)
            if all((values[n] > 0) == sign for n, sign in self.nodes[next_node]):
                accepted = next_node
                counter += 1
                next_node += 1
                edge = self.edges.get(accepted)
                if edge is not None:
                    exit_d, progression, _, to_node = edge
                    exited = all((values[n] > 0) == sign for n, sign in exit_d)
                    if not exited:
                        if remaining.get(accepted, 0) > 0:
                            before = prev_loop.get(accepted)
                            if before is None or self._progressed(
                                progression, before, values
                            ):
                                next_node = to_node
                                remaining[accepted] -= 1
                                self.last_traversal = True
                        else:
                            # Counter exhausted but the exit still fails; the
                            # walk advances anyway and we record the anomaly.
                            self.context.forced_advances += 1
                    prev_loop[accepted] = {
                        name: values[name] for name, _ in progression
                    }
        record = _Record(counter, next_node, remaining, prev_loop)
        records[state] = record
        return float(self.context.h_max - record.counter)

    @staticmethod
    def _progressed(progression, before, after) -> bool:
        for name, direction in progression:
            if direction == DECREASE:
                if not after[name] < before[name]:
                    return False
            elif not after[name] > before[name]:
                return False
        return True


class CombinedHeuristic:
    """Sum of member heuristics; infinity dominates."""

    def __init__(self, *parts):
        self.parts = list(parts)
        self.last_traversal = False

    def evaluate(self, state, prev_state) -> float:
        total = 0.0
        self.last_traversal = False
        for part in self.parts:
            total += part.evaluate(state, prev_state)
            if part.last_traversal:
                self.last_traversal = True
        return total


# ---------------------------------------------------------------------------
# Best-first search
# ---------------------------------------------------------------------------


@dataclass
class SearchStats:
    expanded: int = 0
    evaluated: int = 0
    plan_length: int | None = None
    wall_time: float = 0.0
    status: str = "solved"  # solved | unsolvable | resource-limit
    loop_traversals: int = 0

    def to_json(self) -> dict:
        return {
            "expanded": self.expanded,
            "evaluated": self.evaluated,
            "plan_length": self.plan_length,
            "wall_time": round(self.wall_time, 4),
            "status": self.status,
            "loop_traversals": self.loop_traversals,
        }


def plan(
    task: GroundTask,
    heuristic,
    *,
    strategy: str = "greedy",
    prune: bool = False,
    max_expansions=None,
    timeout=None,
    backend=None,
):
    """Search for a plan; returns ``(plan | None, SearchStats)``.

    ``stats.status`` reports the outcome: ``solved`` (plan is a list of
    ground action names), ``unsolvable`` (open list exhausted), or
    ``resource-limit`` (expansion or time cap hit).  With ``prune`` on, a
    successor whose evaluation traverses a loop edge replaces the entire
    open list ("commit to the loop") and its remaining siblings are
    skipped.
    """
    if strategy not in ("greedy", "astar"):
        raise ValueError(f"unknown search strategy {strategy!r}")
    astar = strategy == "astar"
    start = time.monotonic()
    stats = SearchStats()
    successor_core = _kernels.make_successor_core(task, backend)
    actions = task.actions
    num_atoms = len(task.atoms)
    deadline = None if timeout is None else start + timeout

    def finish(status, plan_actions=None):
        stats.status = status
        stats.plan_length = None if plan_actions is None else len(plan_actions)
        stats.wall_time = time.monotonic() - start
        return plan_actions, stats

    init = task.init
    h0 = heuristic.evaluate(init, None)
    stats.evaluated += 1
    if h0 == math.inf:
        return finish("unsolvable")

    tick = itertools.count()
    open_heap = [(h0, next(tick), init, 0)]
    parents = {init: (None, None)}
    g_best = {init: 0}
    closed = set()

    while open_heap:
        f, _, state, g = heapq.heappop(open_heap)
        if state in closed or (astar and g > g_best.get(state, math.inf)):
            continue
        closed.add(state)
        if goal_satisfied(state, task):
            plan_actions = _reconstruct(parents, state)
            _validate(task, plan_actions)
            return finish("solved", plan_actions)
        if max_expansions is not None and stats.expanded >= max_expansions:
            return finish("resource-limit")
        if deadline is not None and time.monotonic() > deadline:
            return finish("resource-limit")
        stats.expanded += 1

        mask = _kernels.state_mask(num_atoms, state)
        for index in successor_core.applicable(mask):
            action = actions[index]
            child = (state - action.delete) | action.add
            if child in closed:
                continue
            g_child = g + 1
            if astar and g_child >= g_best.get(child, math.inf):
                continue
            h = heuristic.evaluate(child, state)
            stats.evaluated += 1
            if h == math.inf:
                continue  # relaxed dead end: the goal is unreachable from here
            g_best[child] = g_child
            parents[child] = (state, action.name)
            entry = (g_child + h if astar else h, next(tick), child, g_child)
            if prune and heuristic.last_traversal:
                stats.loop_traversals += 1
                open_heap = [entry]
                break  # siblings are dropped along with the old open list
            heapq.heappush(open_heap, entry)

    return finish("unsolvable")


def _reconstruct(parents, state):
    names = []
    while True:
        state, action = parents[state]
        if action is None:
            break
        names.append(action)
    names.reverse()
    return names


def _validate(task, plan_actions):
    index = {a.name: a for a in task.actions}
    state = task.init
    for name in plan_actions:
        state = pddl_apply(state, index[name])
    if not goal_satisfied(state, task):
        raise PlanExecutionError("search produced a plan that misses the goal")
