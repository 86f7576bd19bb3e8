"""State functions derived from count features, and pool preprocessing.

A numeric feature induces three kinds of state functions used by landmark
graphs:

* a *descriptor* — the Boolean function ``f(s) > 0``, used with a polarity
  (a signed descriptor requires the Boolean value to equal its sign);
* a *progressor* — a Boolean function of state pairs: ``decrease`` holds when
  the feature value strictly drops from the earlier to the later state, and
  ``increase`` when it strictly rises;
* a *value* — the raw numeric feature, used to initialize loop counters.

Preprocessing prunes a feature pool against training valuations with four
independent rules:

1. drop a feature whose value is constant across *all* states of some
   trajectory;
2. drop a feature whose value is constant across all *non-initial* states of
   some trajectory but different in that trajectory's initial state;
3. of all features sharing the same Boolean valuation profile, keep only the
   cheapest;
4. of two surviving profiles that are complements of each other, keep only
   the cheaper representative.

Rules 3 and 4 run first (on the full pool, so the kept representative of a
profile class never depends on which other rules are enabled), then rule 2,
then rule 1.  This makes the survivor sets of the presets nested:
``phi4 <= phi3 <= phi2 <= phi1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PreprocessingError
from .features import Feature, ModelState

INCREASE = "increase"
DECREASE = "decrease"

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class SignedDescriptor:
    """Boolean test on a single state: feature positivity matches the sign."""

    feature: str  # canonical feature string
    positive: bool = True

    def holds(self, value: int) -> bool:
        return (value > 0) == self.positive

    @property
    def polarity(self) -> str:
        return POSITIVE if self.positive else NEGATIVE

    def __str__(self):
        return self.feature if self.positive else f"(not {self.feature})"


@dataclass(frozen=True)
class Progressor:
    """Boolean test on an ordered state pair: strict value change."""

    feature: str
    direction: str  # INCREASE or DECREASE

    def holds(self, earlier: int, later: int) -> bool:
        if self.direction == DECREASE:
            return later < earlier
        return later > earlier

    def __str__(self):
        arrow = "v" if self.direction == DECREASE else "^"
        return f"{self.feature}{arrow}"


# ---------------------------------------------------------------------------
# Valuation tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionTable:
    """Numeric valuations of a feature pool over a set of trajectories.

    ``values[t][i][k]`` is the value of feature ``k`` in state ``i`` of
    trajectory ``t``.  Features are identified by canonical name; synthetic
    tables (used for randomized differential testing) may use arbitrary
    unique names with unit complexity.
    """

    names: tuple[str, ...]
    complexities: tuple[int, ...]
    values: tuple[tuple[tuple[int, ...], ...], ...]
    index: dict[str, int] = field(repr=False, compare=False)

    @staticmethod
    def from_features(features, state_lists) -> "FunctionTable":
        """Evaluate ``features`` on per-trajectory lists of ModelStates."""
        feats = tuple(features)
        values = tuple(
            tuple(tuple(f.evaluate(s) for f in feats) for s in states)
            for states in state_lists
        )
        names = tuple(f.canon for f in feats)
        return FunctionTable(
            names=names,
            complexities=tuple(f.complexity for f in feats),
            values=values,
            index={n: k for k, n in enumerate(names)},
        )

    @staticmethod
    def synthetic(values, names=None, complexities=None) -> "FunctionTable":
        """Build a table from raw value matrices (for tests and tooling)."""
        values = tuple(tuple(tuple(row) for row in traj) for traj in values)
        width = len(values[0][0]) if values and values[0] else 0
        for traj in values:
            for row in traj:
                if len(row) != width:
                    raise PreprocessingError("ragged valuation matrix")
        if names is None:
            names = tuple(f"f{k}" for k in range(width))
        names = tuple(names)
        if len(set(names)) != len(names):
            raise PreprocessingError("duplicate feature names")
        if complexities is None:
            complexities = tuple(1 for _ in names)
        return FunctionTable(
            names=names,
            complexities=tuple(complexities),
            values=values,
            index={n: k for k, n in enumerate(names)},
        )

    @property
    def num_trajectories(self) -> int:
        return len(self.values)

    def length(self, t: int) -> int:
        return len(self.values[t])

    def value(self, t: int, i: int, k: int) -> int:
        return self.values[t][i][k]

    def holds(self, t: int, i: int, k: int) -> bool:
        return self.values[t][i][k] > 0

    def column(self, k: int):
        """All values of feature ``k`` grouped by trajectory."""
        return tuple(tuple(row[k] for row in traj) for traj in self.values)

    def restrict(self, keep) -> "FunctionTable":
        keep = tuple(keep)
        names = tuple(self.names[k] for k in keep)
        return FunctionTable(
            names=names,
            complexities=tuple(self.complexities[k] for k in keep),
            values=tuple(
                tuple(tuple(row[k] for k in keep) for row in traj)
                for traj in self.values
            ),
            index={n: j for j, n in enumerate(names)},
        )


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

PHI_PRESETS: dict[str, tuple[int, ...]] = {
    "phi1": (),
    "phi2": (3, 4),
    "phi3": (2, 3, 4),
    "phi4": (1, 2, 3, 4),
}

# Execution order is fixed regardless of which rules are enabled.
_RULE_ORDER = (3, 4, 2, 1)


@dataclass(frozen=True)
class PreprocessResult:
    table: FunctionTable
    kept: tuple[int, ...]  # column indices into the input table
    removed: dict  # rule -> list of (removed name, witness name or None)


def _constant(seq) -> bool:
    return all(v == seq[0] for v in seq)


def _rule1_fires(column) -> bool:
    return any(len(traj) >= 1 and _constant(traj) for traj in column)


def _rule2_fires(column) -> bool:
    for traj in column:
        if len(traj) >= 2 and _constant(traj[1:]) and traj[0] != traj[1]:
            return True
    return False


def preprocess(table: FunctionTable, rules) -> PreprocessResult:
    """Apply the selected pruning rules; see the module docstring for the
    fixed execution order that keeps preset survivor sets nested."""
    rules = frozenset(rules)
    unknown = rules - {1, 2, 3, 4}
    if unknown:
        raise PreprocessingError(f"unknown preprocessing rule(s): {sorted(unknown)}")

    alive = list(range(len(table.names)))
    removed: dict[int, list] = {rule: [] for rule in _RULE_ORDER if rule in rules}

    def rank(k):
        return (table.complexities[k], table.names[k])

    for rule in _RULE_ORDER:
        if rule not in rules:
            continue
        if rule == 3:
            groups: dict[tuple, list] = {}
            for k in alive:
                boolvec = tuple(
                    v > 0 for traj in table.column(k) for v in traj
                )
                groups.setdefault(boolvec, []).append(k)
            alive = []
            for boolvec in groups:
                members = sorted(groups[boolvec], key=rank)
                keeper = members[0]
                alive.append(keeper)
                for k in members[1:]:
                    removed[3].append((table.names[k], table.names[keeper]))
            alive.sort()
        elif rule == 4:
            classes: dict[tuple, list] = {}
            for k in alive:
                boolvec = tuple(
                    v > 0 for traj in table.column(k) for v in traj
                )
                classes.setdefault(boolvec, []).append(k)
            order = sorted(classes, key=lambda v: rank(min(classes[v], key=rank)))
            resolved = set()
            dropped = set()
            for boolvec in order:
                if boolvec in resolved:
                    continue
                mirror = tuple(not b for b in boolvec)
                if mirror != boolvec and mirror in classes and mirror not in resolved:
                    # This class's best representative outranks the mirror's
                    # (classes are visited in rank order), so it wins.
                    keeper = min(classes[boolvec], key=rank)
                    for k in classes[mirror]:
                        dropped.add(k)
                        removed[4].append((table.names[k], table.names[keeper]))
                    resolved.add(boolvec)
                    resolved.add(mirror)
            alive = [k for k in alive if k not in dropped]
        elif rule == 2:
            survivors = []
            for k in alive:
                if _rule2_fires(table.column(k)):
                    removed[2].append((table.names[k], None))
                else:
                    survivors.append(k)
            alive = survivors
        elif rule == 1:
            survivors = []
            for k in alive:
                if _rule1_fires(table.column(k)):
                    removed[1].append((table.names[k], None))
                else:
                    survivors.append(k)
            alive = survivors

    return PreprocessResult(
        table=table.restrict(alive), kept=tuple(alive), removed=removed
    )


def derive_table(features, trajectories, domain) -> FunctionTable:
    """Evaluate a feature pool over trajectories (list of Trajectory)."""
    from .features import model_states_from_trajectories

    state_lists = model_states_from_trajectories(trajectories, domain)
    return FunctionTable.from_features(features, state_lists)


def preprocess_pool(features, trajectories, domain, phi: str) -> PreprocessResult:
    """End-to-end: valuate a pool on trajectories and apply a phi preset."""
    if phi not in PHI_PRESETS:
        raise PreprocessingError(f"unknown preprocessing preset {phi!r}")
    table = derive_table(features, trajectories, domain)
    return preprocess(table, PHI_PRESETS[phi])
