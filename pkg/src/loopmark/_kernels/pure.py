"""Pure-Python reference kernels for search-time inner loops.

Both cores work on a *state mask*: a ``bytes``/``bytearray`` of length
``num_atoms`` with 1 at the index of every true atom.  Ground actions are
described by flattened index arrays (``flat`` values plus an ``offsets``
array of length ``num_actions + 1``), which keeps the construction identical
across backends.

The cores reuse internal scratch buffers between calls and are therefore not
thread-safe; one core per search, as one search runs on one thread.
"""

from __future__ import annotations

import heapq
import math

BACKEND_NAME = "pure"


def _slices(flat, offsets):
    return [tuple(flat[offsets[a] : offsets[a + 1]]) for a in range(len(offsets) - 1)]


class RelaxationCore:
    """Delete-relaxation atom costs by a generalized Dijkstra sweep.

    ``mode`` selects how an action's cost accumulates over its preconditions:
    ``"add"`` sums the settled precondition costs, ``"max"`` keeps the
    largest.  An action fires at accumulated cost + 1 (unit action costs);
    atoms true in the state cost 0.
    """

    def __init__(self, mode, num_atoms, pre_flat, pre_offsets, add_flat, add_offsets, goal):
        if mode not in ("add", "max"):
            raise ValueError(f"unknown relaxation mode {mode!r}")
        self.mode = mode
        self.num_atoms = num_atoms
        self.pres = _slices(pre_flat, pre_offsets)
        self.adds = _slices(add_flat, add_offsets)
        consumers = [[] for _ in range(num_atoms)]
        for action, pre in enumerate(self.pres):
            for atom in pre:
                consumers[atom].append(action)
        self.consumers = [tuple(c) for c in consumers]
        self.zero_pre = tuple(a for a, pre in enumerate(self.pres) if not pre)
        self.goal = tuple(sorted(set(goal)))
        self.is_goal = bytearray(num_atoms)
        for atom in self.goal:
            self.is_goal[atom] = 1

    def _sweep(self, mask, full):
        if len(mask) != self.num_atoms:
            raise ValueError(
                f"mask has {len(mask)} bytes, task has {self.num_atoms} atoms"
            )
        inf = math.inf
        additive = self.mode == "add"
        cost = [inf] * self.num_atoms
        acc = [0.0] * len(self.pres)
        unsat = [len(pre) for pre in self.pres]
        for i in range(self.num_atoms):
            if mask[i]:
                cost[i] = 0.0
        heap = [(0.0, i) for i in range(self.num_atoms) if mask[i]]
        heapq.heapify(heap)
        for action in self.zero_pre:
            for atom in self.adds[action]:
                if 1.0 < cost[atom]:
                    cost[atom] = 1.0
                    heapq.heappush(heap, (1.0, atom))
        goals_left = -1 if full else len(self.goal)
        while heap:
            c, atom = heapq.heappop(heap)
            if c > cost[atom]:
                continue  # stale entry
            if goals_left >= 0 and self.is_goal[atom]:
                goals_left -= 1
                if goals_left == 0:
                    break
            for action in self.consumers[atom]:
                if additive:
                    acc[action] += c
                else:
                    acc[action] = c  # settled in nondecreasing order: c is the max
                unsat[action] -= 1
                if unsat[action] == 0:
                    fire = acc[action] + 1.0
                    for effect in self.adds[action]:
                        if fire < cost[effect]:
                            cost[effect] = fire
                            heapq.heappush(heap, (fire, effect))
        return cost

    def costs(self, mask):
        """Full fixpoint: the relaxed cost of every atom (inf = unreachable)."""
        return self._sweep(mask, full=True)

    def value(self, mask):
        """Aggregate goal cost: sum (add) or max (max); inf on a dead end."""
        cost = self._sweep(mask, full=False)
        total = 0.0
        for atom in self.goal:
            c = cost[atom]
            if c == math.inf:
                return math.inf
            if self.mode == "add":
                total += c
            elif c > total:
                total = c
        return total


class SuccessorCore:
    """Applicability filter over the grounded actions of one task."""

    def __init__(self, num_atoms, pre_flat, pre_offsets, neg_flat, neg_offsets):
        self.num_atoms = num_atoms
        self.pres = _slices(pre_flat, pre_offsets)
        self.negs = _slices(neg_flat, neg_offsets)

    def applicable(self, mask):
        """Indices of applicable actions, ascending."""
        if len(mask) != self.num_atoms:
            raise ValueError(
                f"mask has {len(mask)} bytes, task has {self.num_atoms} atoms"
            )
        out = []
        for action, pre in enumerate(self.pres):
            for atom in pre:
                if not mask[atom]:
                    break
            else:
                for atom in self.negs[action]:
                    if mask[atom]:
                        break
                else:
                    out.append(action)
        return out
