"""Discovery of generalized landmark graphs from training valuations.

A *landmark* is a set of signed descriptors; it *holds* in a state when
every positive member's feature is positive there and every negative
member's feature is zero.  Walking a trajectory against a graph accepts at
most one landmark per state, in chain order, starting after the initial
state (which never accepts anything).

A *landmark graph* is a chain of landmarks (implicit edges ``n -> n+1``)
optionally closed by one loop edge from the last chain node back to an
earlier node.  The loop edge carries three conditions:

* ``exit`` — signed descriptors that hold exactly at the final acceptance of
  the loop landmark (and at none of the earlier ones);
* ``progression`` — strict value changes that hold between every pair of
  consecutive acceptances of the loop landmark;
* ``counter`` — features whose initial-state value equals the number of
  acceptances of the loop landmark.

Chain discovery selects one acceptance index per trajectory, each past the
previous landmark's index, minimizing the index sum; the landmark is the set
of all signed descriptors that hold at every selected state *and* flipped
there (did not hold one state earlier).  Among equal-sum index tuples the
largest such descriptor set wins, then the lexicographically smallest tuple.
After every chain extension a loop closure is attempted from the new last
node back to each earlier node (nearest to the chain start first, giving the
longest loop span); the first closure whose three condition categories are
all non-empty ends discovery.  Closure replays each trajectory with the loop
always taken to collect the loop landmark's acceptance indices; conditions
are then required on every trajectory, and at least two trajectories must
loop (two or more acceptances).

``brute_force_discover`` re-implements the same contract by exhaustive
enumeration and is used for randomized cross-checking.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

from .errors import (
    DiscoveryFailedError,
    GraphInapplicableError,
    ResourceLimitError,
    SchemaError,
)
from .statefns import (
    DECREASE,
    FunctionTable,
    INCREASE,
    NEGATIVE,
    POSITIVE,
    Progressor,
    SignedDescriptor,
)

# ---------------------------------------------------------------------------
# Graph data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Landmark:
    descriptors: frozenset[SignedDescriptor]

    def sorted_descriptors(self) -> tuple[SignedDescriptor, ...]:
        return tuple(
            sorted(self.descriptors, key=lambda d: (d.feature, not d.positive))
        )

    def __str__(self):
        return "{" + ", ".join(str(d) for d in self.sorted_descriptors()) + "}"


@dataclass(frozen=True)
class LoopEdge:
    from_node: int
    to_node: int
    exit: frozenset[SignedDescriptor]
    progression: frozenset[Progressor]
    counter: frozenset[str]  # canonical feature names

    def sorted_exit(self):
        return tuple(sorted(self.exit, key=lambda d: (d.feature, not d.positive)))

    def sorted_progression(self):
        return tuple(sorted(self.progression, key=lambda p: (p.feature, p.direction)))

    def sorted_counter(self):
        return tuple(sorted(self.counter))


@dataclass(frozen=True)
class LandmarkGraph:
    nodes: tuple[Landmark, ...]
    loop_edges: tuple[LoopEdge, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def loop_edge_from(self, node: int):
        for edge in self.loop_edges:
            if edge.from_node == node:
                return edge
        return None

    def feature_names(self) -> tuple[str, ...]:
        names = set()
        for node in self.nodes:
            names.update(d.feature for d in node.descriptors)
        for edge in self.loop_edges:
            names.update(d.feature for d in edge.exit)
            names.update(p.feature for p in edge.progression)
            names.update(edge.counter)
        return tuple(sorted(names))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "descriptors": [
                        {"feature": d.feature, "polarity": d.polarity}
                        for d in node.sorted_descriptors()
                    ]
                }
                for node in self.nodes
            ],
            "loop_edges": [
                {
                    "from": edge.from_node,
                    "to": edge.to_node,
                    "exit": [
                        {"feature": d.feature, "polarity": d.polarity}
                        for d in edge.sorted_exit()
                    ],
                    "progression": [
                        {"feature": p.feature, "direction": p.direction}
                        for p in edge.sorted_progression()
                    ],
                    "counter": list(edge.sorted_counter()),
                }
                for edge in self.loop_edges
            ],
            "provenance": self.provenance,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.dumps())

    def to_dot(self) -> str:
        lines = ["digraph landmarks {", "  rankdir=LR;", "  node [shape=box];"]
        for i, node in enumerate(self.nodes):
            label = "L%d\\n%s" % (
                i,
                "\\n".join(str(d) for d in node.sorted_descriptors()),
            )
            lines.append(f'  n{i} [label="{label}"];')
        for i in range(len(self.nodes) - 1):
            lines.append(f"  n{i} -> n{i + 1};")
        for edge in self.loop_edges:
            exit_s = ", ".join(str(d) for d in edge.sorted_exit())
            prog_s = ", ".join(str(p) for p in edge.sorted_progression())
            counter_s = ", ".join(edge.sorted_counter())
            label = f"exit: {exit_s}\\nprogress: {prog_s}\\ncounter: {counter_s}"
            lines.append(
                f'  n{edge.from_node} -> n{edge.to_node} '
                f'[style=dashed, label="{label}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"


def _parse_signed(entry, where) -> SignedDescriptor:
    if not isinstance(entry, dict) or "feature" not in entry or "polarity" not in entry:
        raise SchemaError(f"{where}: expected {{feature, polarity}}")
    polarity = entry["polarity"]
    if polarity not in (POSITIVE, NEGATIVE):
        raise SchemaError(f"{where}: bad polarity {polarity!r}")
    return SignedDescriptor(entry["feature"], polarity == POSITIVE)


def graph_from_json(data) -> LandmarkGraph:
    if not isinstance(data, dict):
        raise SchemaError("landmark graph: expected a JSON object")
    raw_nodes = data.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise SchemaError("landmark graph: missing or empty 'nodes'")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(raw, dict) or "descriptors" not in raw:
            raise SchemaError(f"{where}: expected {{descriptors: [...]}}")
        descriptors = frozenset(
            _parse_signed(entry, where) for entry in raw["descriptors"]
        )
        if not descriptors:
            raise SchemaError(f"{where}: empty landmark")
        nodes.append(Landmark(descriptors))
    edges = []
    for i, raw in enumerate(data.get("loop_edges", [])):
        where = f"loop_edges[{i}]"
        try:
            from_node = raw["from"]
            to_node = raw["to"]
        except (TypeError, KeyError):
            raise SchemaError(f"{where}: missing 'from'/'to'")
        if not (0 <= to_node < from_node < len(nodes)):
            raise SchemaError(f"{where}: bad endpoints {from_node}->{to_node}")
        exit_set = frozenset(
            _parse_signed(entry, where + ".exit") for entry in raw.get("exit", [])
        )
        progression = set()
        for entry in raw.get("progression", []):
            if (
                not isinstance(entry, dict)
                or "feature" not in entry
                or entry.get("direction") not in (INCREASE, DECREASE)
            ):
                raise SchemaError(f"{where}: bad progression entry")
            progression.add(Progressor(entry["feature"], entry["direction"]))
        counter = frozenset(raw.get("counter", []))
        if not counter:
            raise SchemaError(f"{where}: loop edge needs a counter feature")
        edges.append(
            LoopEdge(from_node, to_node, exit_set, frozenset(progression), counter)
        )
    froms = [e.from_node for e in edges]
    if len(set(froms)) != len(froms):
        raise SchemaError("multiple loop edges from the same node")
    provenance = data.get("provenance", {})
    if not isinstance(provenance, dict):
        raise SchemaError("provenance must be an object")
    return LandmarkGraph(tuple(nodes), tuple(edges), provenance)


def load_graph(path) -> LandmarkGraph:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return graph_from_json(data)


# ---------------------------------------------------------------------------
# Internal change-set machinery (features as column indices)
# ---------------------------------------------------------------------------


def _change_sets(table: FunctionTable):
    """changes[t][i]: signed columns flipping at state i (i >= 1)."""
    width = len(table.names)
    changes = []
    for traj in table.values:
        per_state = [frozenset()]
        for i in range(1, len(traj)):
            prev_row, row = traj[i - 1], traj[i]
            flips = set()
            for k in range(width):
                now, before = row[k] > 0, prev_row[k] > 0
                if now != before:
                    flips.add((k, now))
            per_state.append(frozenset(flips))
        changes.append(per_state)
    return changes


def _descriptor_rank(table, signed):
    k, sign = signed
    return (table.complexities[k], table.names[k], 0 if sign else 1)


def _public_landmark(table, internal) -> Landmark:
    return Landmark(
        frozenset(SignedDescriptor(table.names[k], sign) for k, sign in internal)
    )


class _Deadline:
    def __init__(self, seconds):
        self.limit = None if seconds is None else time.monotonic() + seconds

    def check(self):
        if self.limit is not None and time.monotonic() > self.limit:
            raise ResourceLimitError("discovery exceeded its time budget")


# ---------------------------------------------------------------------------
# Chain discovery
# ---------------------------------------------------------------------------


def discover_next_landmark(table: FunctionTable, prev, changes=None, deadline=None):
    """Smallest-index-sum landmark past ``prev``; None when impossible.

    Among index tuples of the minimal feasible sum, the one with the largest
    descriptor set wins, then the lexicographically smallest tuple.  Returns
    ``(internal_landmark, indices)`` where the landmark is a frozenset of
    ``(column, sign)`` pairs and ``indices`` the acceptance index per
    trajectory.
    """
    if changes is None:
        changes = _change_sets(table)
    count = table.num_trajectories
    domains = []
    for t in range(count):
        lo, hi = prev[t] + 1, table.length(t) - 1
        if lo > hi:
            return None
        domains.append((lo, hi))

    suffix_min = [0] * (count + 1)
    suffix_max = [0] * (count + 1)
    for t in range(count - 1, -1, -1):
        suffix_min[t] = suffix_min[t + 1] + domains[t][0]
        suffix_max[t] = suffix_max[t + 1] + domains[t][1]

    def dfs(t, budget, inter, chosen, out):
        if t == count:
            out.append((inter, tuple(chosen)))
            return
        lo, hi = domains[t]
        for idx in range(lo, hi + 1):
            rest = budget - idx
            if rest < suffix_min[t + 1]:
                break  # indices only grow from here
            if rest > suffix_max[t + 1]:
                continue
            narrowed = changes[t][idx] if inter is None else inter & changes[t][idx]
            if not narrowed:
                continue
            dfs(t + 1, rest, narrowed, chosen + [idx], out)

    for target in range(suffix_min[0], suffix_max[0] + 1):
        if deadline is not None:
            deadline.check()
        feasible = []
        dfs(0, target, None, [], feasible)
        if feasible:
            # max() keeps the first (lexicographically smallest) maximum.
            return max(feasible, key=lambda pair: len(pair[0]))
    return None


# ---------------------------------------------------------------------------
# Loop discovery
# ---------------------------------------------------------------------------


def _holds(table, t, idx, internal) -> bool:
    return all(table.holds(t, idx, k) == sign for k, sign in internal)


def _loop_occurrences(table, chain, back_to, t):
    """Acceptance indices of the last chain node on trajectory ``t`` when the
    loop edge back to ``back_to`` is always taken."""
    last = len(chain) - 1
    cursor = 0
    occurrences = []
    for idx in range(1, table.length(t)):
        if _holds(table, t, idx, chain[cursor]):
            if cursor == last:
                occurrences.append(idx)
                cursor = back_to
            else:
                cursor += 1
    return occurrences


def _try_loop(table, chain, back_to):
    """Conditions for a loop from the last chain node back to ``back_to``;
    None when any condition category comes out empty."""
    count = table.num_trajectories
    width = len(table.names)
    occurrences = [_loop_occurrences(table, chain, back_to, t) for t in range(count)]
    if any(not occ for occ in occurrences):
        return None
    looping = [t for t in range(count) if len(occurrences[t]) >= 2]
    if len(looping) < 2:
        return None

    counters = [
        k
        for k in range(width)
        if all(table.value(t, 0, k) == len(occurrences[t]) for t in range(count))
    ]
    if not counters:
        return None

    exits = []
    for k in range(width):
        for sign in (True, False):
            ok = True
            for t in range(count):
                occ = occurrences[t]
                if (table.holds(t, occ[-1], k)) != sign:
                    ok = False
                    break
                if any(table.holds(t, idx, k) == sign for idx in occ[:-1]):
                    ok = False
                    break
            if ok:
                exits.append((k, sign))
    if not exits:
        return None

    progressors = []
    for k in range(width):
        for direction in (DECREASE, INCREASE):
            ok = True
            for t in range(count):
                occ = occurrences[t]
                for a, b in zip(occ, occ[1:]):
                    earlier, later = table.value(t, a, k), table.value(t, b, k)
                    moved = later < earlier if direction == DECREASE else later > earlier
                    if not moved:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                progressors.append((k, direction))
    if not progressors:
        return None

    exit_pick = min(exits, key=lambda e: _descriptor_rank(table, e))
    prog_pick = min(
        progressors,
        key=lambda p: (
            table.complexities[p[0]],
            table.names[p[0]],
            0 if p[1] == DECREASE else 1,
        ),
    )
    counter_pick = min(counters, key=lambda k: (table.complexities[k], table.names[k]))

    edge = LoopEdge(
        from_node=len(chain) - 1,
        to_node=back_to,
        exit=frozenset({SignedDescriptor(table.names[exit_pick[0]], exit_pick[1])}),
        progression=frozenset({Progressor(table.names[prog_pick[0]], prog_pick[1])}),
        counter=frozenset({table.names[counter_pick]}),
    )
    return edge, occurrences


def discover_loop(table, chain, deadline=None):
    """First feasible loop from the last chain node, preferring the longest
    span (loop back to the earliest node)."""
    if len(chain) < 2:
        return None
    for back_to in range(0, len(chain) - 1):
        if deadline is not None:
            deadline.check()
        found = _try_loop(table, chain, back_to)
        if found is not None:
            return found
    return None


# ---------------------------------------------------------------------------
# Full graph discovery
# ---------------------------------------------------------------------------


def discover_graph(
    table: FunctionTable, provenance=None, time_limit=None
) -> LandmarkGraph:
    """Grow the landmark chain and close it with a loop when possible.

    Raises DiscoveryFailedError when not even one landmark exists, and
    ResourceLimitError when ``time_limit`` (seconds) runs out.
    """
    start = time.monotonic()
    deadline = _Deadline(time_limit)
    changes = _change_sets(table)
    count = table.num_trajectories

    prev = [0] * count
    chain = []
    node_indices = []
    loop = None
    loop_occurrences = None

    while True:
        deadline.check()
        found = discover_next_landmark(table, prev, changes, deadline)
        if found is None:
            break
        landmark, indices = found
        chain.append(landmark)
        node_indices.append(list(indices))
        prev = list(indices)
        closed = discover_loop(table, chain, deadline)
        if closed is not None:
            loop, loop_occurrences = closed
            break

    if not chain:
        raise DiscoveryFailedError(
            "no landmark separates consecutive states on every trajectory"
        )

    info = dict(provenance or {})
    info.update(
        {
            "node_acceptance_indices": node_indices,
            "loop_occurrences": loop_occurrences,
            "discovery_seconds": round(time.monotonic() - start, 3),
        }
    )
    return LandmarkGraph(
        nodes=tuple(_public_landmark(table, lm) for lm in chain),
        loop_edges=(loop,) if loop is not None else (),
        provenance=info,
    )


# ---------------------------------------------------------------------------
# Trajectory satisfaction
# ---------------------------------------------------------------------------


@dataclass
class SatisfiesTrace:
    ok: bool
    reason: str
    acceptances: list  # (node, state index)
    loop_count: int
    expected_count: int


def _graph_columns(graph: LandmarkGraph, table: FunctionTable):
    def column(name):
        try:
            return table.index[name]
        except KeyError:
            raise GraphInapplicableError(
                f"feature {name!r} is not valuated in this table"
            )

    nodes = [
        frozenset((column(d.feature), d.positive) for d in node.descriptors)
        for node in graph.nodes
    ]
    edges = {}
    for edge in graph.loop_edges:
        edges[edge.from_node] = (
            [(column(d.feature), d.positive) for d in edge.exit],
            [(column(p.feature), p.direction) for p in edge.progression],
            [column(name) for name in edge.counter],
            edge.to_node,
        )
    return nodes, edges


def satisfies_trace(graph: LandmarkGraph, table: FunctionTable, t: int) -> SatisfiesTrace:
    nodes, edges = _graph_columns(graph, table)
    length = table.length(t)

    def accepted(internal, idx):
        return all(table.holds(t, idx, k) == sign for k, sign in internal)

    # Each loop landmark must be accepted exactly as many times as its
    # counter features say in the initial state.
    expected = {}
    for from_node, (_, _, counter_cols, _) in edges.items():
        values = {table.value(t, 0, k) for k in counter_cols}
        if len(values) != 1:
            return SatisfiesTrace(
                False, "counter features disagree in the initial state", [], 0, -1
            )
        expected[from_node] = values.pop()

    cursor = 0
    counts = {from_node: 0 for from_node in edges}
    acceptances = []
    for idx in range(1, length):
        if cursor >= len(nodes):
            break
        if not accepted(nodes[cursor], idx):
            continue
        acceptances.append((cursor, idx))
        if cursor in edges:
            counts[cursor] += 1
            exit_cols, _, _, to_node = edges[cursor]
            exited = all(table.holds(t, idx, k) == sign for k, sign in exit_cols)
            cursor = cursor + 1 if exited else to_node
        else:
            cursor += 1

    loop_count = sum(counts.values())
    expected_count = sum(expected.values())
    if cursor < len(nodes):
        return SatisfiesTrace(
            False,
            f"walk stopped at node {cursor} of {len(nodes)}",
            acceptances,
            loop_count,
            expected_count,
        )
    if counts != expected:
        return SatisfiesTrace(
            False,
            f"loop landmark acceptances {counts} do not match {expected}",
            acceptances,
            loop_count,
            expected_count,
        )
    return SatisfiesTrace(True, "ok", acceptances, loop_count, expected_count)


def satisfies(graph: LandmarkGraph, table: FunctionTable, t: int) -> bool:
    return satisfies_trace(graph, table, t).ok


# ---------------------------------------------------------------------------
# Brute-force reference implementation (for randomized cross-checking)
# ---------------------------------------------------------------------------


def _bf_change_descriptors(table, t, idx):
    out = set()
    for k in range(len(table.names)):
        before = table.value(t, idx - 1, k) > 0
        now = table.value(t, idx, k) > 0
        if now and not before:
            out.add((k, True))
        if before and not now:
            out.add((k, False))
    return out


def brute_force_next_landmark(table, prev):
    ranges = []
    for t in range(table.num_trajectories):
        indices = list(range(prev[t] + 1, table.length(t)))
        if not indices:
            return None
        ranges.append(indices)
    best = None
    for combo in itertools.product(*ranges):
        landmark = None
        for t, idx in enumerate(combo):
            described = _bf_change_descriptors(table, t, idx)
            landmark = described if landmark is None else landmark & described
            if not landmark:
                break
        if landmark:
            key = (sum(combo), -len(landmark), combo)
            if best is None or key < best[0]:
                best = (key, frozenset(landmark), combo)
    if best is None:
        return None
    return best[1], best[2]


def brute_force_loop(table, chain):
    if len(chain) < 2:
        return None
    for back_to in range(len(chain) - 1):
        # Replay every trajectory, always taking the loop.
        all_occ = []
        for t in range(table.num_trajectories):
            cursor, occ = 0, []
            for idx in range(1, table.length(t)):
                if all(
                    (table.value(t, idx, k) > 0) == sign for k, sign in chain[cursor]
                ):
                    if cursor == len(chain) - 1:
                        occ.append(idx)
                        cursor = back_to
                    else:
                        cursor += 1
            all_occ.append(occ)
        if any(len(occ) == 0 for occ in all_occ):
            continue
        if sum(1 for occ in all_occ if len(occ) >= 2) < 2:
            continue

        counters = []
        for k in range(len(table.names)):
            if all(
                table.value(t, 0, k) == len(all_occ[t])
                for t in range(table.num_trajectories)
            ):
                counters.append(k)
        exits = []
        for k in range(len(table.names)):
            for sign in (True, False):
                good = True
                for t in range(table.num_trajectories):
                    occ = all_occ[t]
                    tail = (table.value(t, occ[-1], k) > 0) == sign
                    earlier = [
                        (table.value(t, idx, k) > 0) == sign for idx in occ[:-1]
                    ]
                    if not tail or any(earlier):
                        good = False
                        break
                if good:
                    exits.append((k, sign))
        progressors = []
        for k in range(len(table.names)):
            for direction in (DECREASE, INCREASE):
                good = True
                for t in range(table.num_trajectories):
                    occ = all_occ[t]
                    for a, b in zip(occ, occ[1:]):
                        va, vb = table.value(t, a, k), table.value(t, b, k)
                        if direction == DECREASE and not vb < va:
                            good = False
                        if direction == INCREASE and not vb > va:
                            good = False
                        if not good:
                            break
                    if not good:
                        break
                if good:
                    progressors.append((k, direction))

        if counters and exits and progressors:
            exit_pick = min(exits, key=lambda e: _descriptor_rank(table, e))
            prog_pick = min(
                progressors,
                key=lambda p: (
                    table.complexities[p[0]],
                    table.names[p[0]],
                    0 if p[1] == DECREASE else 1,
                ),
            )
            counter_pick = min(
                counters, key=lambda k: (table.complexities[k], table.names[k])
            )
            edge = LoopEdge(
                from_node=len(chain) - 1,
                to_node=back_to,
                exit=frozenset(
                    {SignedDescriptor(table.names[exit_pick[0]], exit_pick[1])}
                ),
                progression=frozenset(
                    {Progressor(table.names[prog_pick[0]], prog_pick[1])}
                ),
                counter=frozenset({table.names[counter_pick]}),
            )
            return edge, all_occ
    return None


def brute_force_discover(table: FunctionTable) -> LandmarkGraph:
    prev = [0] * table.num_trajectories
    chain = []
    loop = None
    while True:
        found = brute_force_next_landmark(table, prev)
        if found is None:
            break
        landmark, combo = found
        chain.append(landmark)
        prev = list(combo)
        closed = brute_force_loop(table, chain)
        if closed is not None:
            loop = closed[0]
            break
    if not chain:
        raise DiscoveryFailedError(
            "no landmark separates consecutive states on every trajectory"
        )
    return LandmarkGraph(
        nodes=tuple(_public_landmark(table, lm) for lm in chain),
        loop_edges=(loop,) if loop is not None else (),
        provenance={},
    )
