"""Description-logic count features over first-order planning states.

Concepts denote object sets, roles denote object-pair sets, and a feature is
the cardinality of a concept's denotation.  The grammar:

    C ::= top | bot | (prim p) | (type T) | (not C) | (and C C) | (or C C)
        | (some R C) | (all R C)
    R ::= p | (inv R) | (comp R R) | (rint R R) | (rdiff R R)

where ``p`` ranges over unary predicates for concepts and binary predicates
for roles, and ``T`` over declared types.  Composite roles (``comp``,
``rint``, ``rdiff``) only take primitive or inverted-primitive operands.
Universal restriction is vacuously true for objects without successors.

Complexity is the syntax-tree node count; the ``count`` wrapper is free.
Features are generated bottom-up by complexity tier with extensional
deduplication against a set of sample states: two concepts with identical
denotations on every sample state are the same feature, and only the
cheapest representative is kept (and used as a building block).
"""

from __future__ import annotations

import itertools
import re
import time
from dataclasses import dataclass, field

from .errors import EmptyPoolError, ValidationError
from .pddl import DomainDef, ROOT_TYPE, TypedName

# ---------------------------------------------------------------------------
# States as first-order models
# ---------------------------------------------------------------------------


class ModelState:
    """A planning state viewed as a finite first-order model.

    Holds per-state memoization of concept/role denotations, so repeated
    feature evaluation against the same state is cheap.
    """

    __slots__ = ("objects", "universe", "unary", "binary", "by_type", "key", "_cache")

    def __init__(self, atom_strs, objects, domain: DomainDef):
        self.objects = tuple(objects)
        self.universe = frozenset(o.name for o in self.objects)
        unary: dict[str, set] = {}
        binary: dict[str, set] = {}
        atoms = []
        for text in sorted(atom_strs):
            parts = text.strip().lstrip("(").rstrip(")").split()
            atoms.append(tuple(parts))
            if len(parts) == 2:
                unary.setdefault(parts[0], set()).add(parts[1])
            elif len(parts) == 3:
                binary.setdefault(parts[0], set()).add((parts[1], parts[2]))
        self.unary = {p: frozenset(v) for p, v in unary.items()}
        self.binary = {p: frozenset(v) for p, v in binary.items()}
        by_type: dict[str, set] = {}
        for obj in self.objects:
            for tname in domain.supertypes(obj.type):
                by_type.setdefault(tname, set()).add(obj.name)
        self.by_type = {t: frozenset(v) for t, v in by_type.items()}
        self.key = (self.objects, frozenset(atoms))
        self._cache: dict[str, frozenset] = {}

    def __eq__(self, other):
        return isinstance(other, ModelState) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


# ---------------------------------------------------------------------------
# Expression AST
# ---------------------------------------------------------------------------

_EMPTY = frozenset()


class Expr:
    __slots__ = ("canon", "complexity")

    def __eq__(self, other):
        return type(other) is type(self) and self.canon == other.canon

    def __hash__(self):
        return hash(self.canon)

    def __repr__(self):
        return self.canon

    def denote(self, state: ModelState) -> frozenset:
        cached = state._cache.get(self.canon)
        if cached is None:
            cached = self._eval(state)
            state._cache[self.canon] = cached
        return cached


class Concept(Expr):
    __slots__ = ()


class Role(Expr):
    __slots__ = ()


class Top(Concept):
    __slots__ = ()

    def __init__(self):
        self.canon = "top"
        self.complexity = 1

    def _eval(self, state):
        return state.universe


class Bot(Concept):
    __slots__ = ()

    def __init__(self):
        self.canon = "bot"
        self.complexity = 1

    def _eval(self, state):
        return _EMPTY


class PrimConcept(Concept):
    __slots__ = ("pred",)

    def __init__(self, pred: str):
        self.pred = pred
        self.canon = f"(prim {pred})"
        self.complexity = 1

    def _eval(self, state):
        return state.unary.get(self.pred, _EMPTY)


class TypeConcept(Concept):
    __slots__ = ("type",)

    def __init__(self, tname: str):
        self.type = tname
        self.canon = f"(type {tname})"
        self.complexity = 1

    def _eval(self, state):
        return state.by_type.get(self.type, _EMPTY)


class Not(Concept):
    __slots__ = ("child",)

    def __init__(self, child: Concept):
        self.child = child
        self.canon = f"(not {child.canon})"
        self.complexity = 1 + child.complexity

    def _eval(self, state):
        return state.universe - self.child.denote(state)


class _BinaryConcept(Concept):
    __slots__ = ("left", "right")
    op = ""
    commutative = True

    def __init__(self, left: Concept, right: Concept):
        if self.commutative and right.canon < left.canon:
            left, right = right, left
        self.left = left
        self.right = right
        self.canon = f"({self.op} {left.canon} {right.canon})"
        self.complexity = 1 + left.complexity + right.complexity


class And(_BinaryConcept):
    __slots__ = ()
    op = "and"

    def _eval(self, state):
        return self.left.denote(state) & self.right.denote(state)


class Or(_BinaryConcept):
    __slots__ = ()
    op = "or"

    def _eval(self, state):
        return self.left.denote(state) | self.right.denote(state)


class _Restriction(Concept):
    __slots__ = ("role", "child")
    op = ""

    def __init__(self, role: Role, child: Concept):
        self.role = role
        self.child = child
        self.canon = f"({self.op} {role.canon} {child.canon})"
        self.complexity = 1 + role.complexity + child.complexity


class Some(_Restriction):
    __slots__ = ()
    op = "some"

    def _eval(self, state):
        targets = self.child.denote(state)
        return frozenset(a for a, b in self.role.denote(state) if b in targets)


class All(_Restriction):
    __slots__ = ()
    op = "all"

    def _eval(self, state):
        targets = self.child.denote(state)
        blocked = frozenset(
            a for a, b in self.role.denote(state) if b not in targets
        )
        return state.universe - blocked


class PrimRole(Role):
    __slots__ = ("pred",)

    def __init__(self, pred: str):
        self.pred = pred
        self.canon = pred
        self.complexity = 1

    def _eval(self, state):
        return state.binary.get(self.pred, _EMPTY)


class Inv(Role):
    __slots__ = ("child",)

    def __init__(self, child: Role):
        self.child = child
        self.canon = f"(inv {child.canon})"
        self.complexity = 1 + child.complexity

    def _eval(self, state):
        return frozenset((b, a) for a, b in self.child.denote(state))


class _BinaryRole(Role):
    __slots__ = ("left", "right")
    op = ""
    commutative = False

    def __init__(self, left: Role, right: Role):
        if self.commutative and right.canon < left.canon:
            left, right = right, left
        self.left = left
        self.right = right
        self.canon = f"({self.op} {left.canon} {right.canon})"
        self.complexity = 1 + left.complexity + right.complexity


class Comp(_BinaryRole):
    __slots__ = ()
    op = "comp"

    def _eval(self, state):
        by_mid: dict[str, list] = {}
        for b, c in self.right.denote(state):
            by_mid.setdefault(b, []).append(c)
        pairs = set()
        for a, b in self.left.denote(state):
            for c in by_mid.get(b, ()):
                pairs.add((a, c))
        return frozenset(pairs)


class RInt(_BinaryRole):
    __slots__ = ()
    op = "rint"
    commutative = True

    def _eval(self, state):
        return self.left.denote(state) & self.right.denote(state)


class RDiff(_BinaryRole):
    __slots__ = ()
    op = "rdiff"

    def _eval(self, state):
        return self.left.denote(state) - self.right.denote(state)


@dataclass(frozen=True)
class Feature:
    """A numeric state function: the size of a concept's denotation."""

    concept: Concept

    @property
    def canon(self) -> str:
        return f"(count {self.concept.canon})"

    @property
    def complexity(self) -> int:
        return self.concept.complexity

    def evaluate(self, state: ModelState) -> int:
        return len(self.concept.denote(state))

    def __repr__(self):
        return self.canon


# ---------------------------------------------------------------------------
# Canonical-string parser
# ---------------------------------------------------------------------------

_FEATURE_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")

_CONCEPT_OPS = {"prim", "type", "not", "and", "or", "some", "all"}
_ROLE_OPS = {"inv", "comp", "rint", "rdiff"}


def _read_sexpr(tokens, pos):
    if pos >= len(tokens):
        raise ValidationError("unexpected end of feature expression")
    token = tokens[pos]
    if token == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read_sexpr(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise ValidationError("unbalanced '(' in feature expression")
        return items, pos + 1
    if token == ")":
        raise ValidationError("unexpected ')' in feature expression")
    return token, pos + 1


def _build_concept(form) -> Concept:
    if isinstance(form, str):
        if form == "top":
            return Top()
        if form == "bot":
            return Bot()
        raise ValidationError(f"bare name {form!r} is not a concept")
    if not form:
        raise ValidationError("empty concept expression")
    op = form[0]
    if op == "prim" and len(form) == 2:
        return PrimConcept(form[1])
    if op == "type" and len(form) == 2:
        return TypeConcept(form[1])
    if op == "not" and len(form) == 2:
        return Not(_build_concept(form[1]))
    if op in ("and", "or") and len(form) == 3:
        cls = And if op == "and" else Or
        return cls(_build_concept(form[1]), _build_concept(form[2]))
    if op in ("some", "all") and len(form) == 3:
        cls = Some if op == "some" else All
        return cls(_build_role(form[1]), _build_concept(form[2]))
    raise ValidationError(f"malformed concept expression starting with {op!r}")


def _build_role(form) -> Role:
    if isinstance(form, str):
        if form in _CONCEPT_OPS or form in ("top", "bot"):
            raise ValidationError(f"{form!r} is not a role")
        return PrimRole(form)
    if not form:
        raise ValidationError("empty role expression")
    op = form[0]
    if op == "inv" and len(form) == 2:
        return Inv(_build_role(form[1]))
    if op in _ROLE_OPS and len(form) == 3:
        cls = {"comp": Comp, "rint": RInt, "rdiff": RDiff}[op]
        return cls(_build_role(form[1]), _build_role(form[2]))
    raise ValidationError(f"malformed role expression starting with {op!r}")


def parse_concept(text: str) -> Concept:
    tokens = _FEATURE_TOKEN_RE.findall(text)
    form, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise ValidationError(f"trailing tokens in concept {text!r}")
    return _build_concept(form)


def parse_feature(text: str) -> Feature:
    tokens = _FEATURE_TOKEN_RE.findall(text)
    form, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise ValidationError(f"trailing tokens in feature {text!r}")
    if not (isinstance(form, list) and len(form) == 2 and form[0] == "count"):
        raise ValidationError(f"expected (count CONCEPT), got {text!r}")
    return Feature(_build_concept(form[1]))


# ---------------------------------------------------------------------------
# Pool generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaConfig:
    """Generation budget: syntactic complexity cap, wall-clock budget in
    seconds, and final pool size cap."""

    max_complexity: int
    time_limit: float
    feature_limit: int


BETA_PRESETS: dict[str, BetaConfig] = {
    "b1": BetaConfig(7, 3600.0, 1000),
    "b2": BetaConfig(9, 3600.0, 4000),
    "b3": BetaConfig(11, 3600.0, 5000),
    "b4": BetaConfig(11, 3600.0, 10000),
    "b5": BetaConfig(15, 3600.0, 10000),
}


@dataclass(frozen=True)
class FeaturePool:
    features: tuple[Feature, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)


def dedupe_states(states) -> list[ModelState]:
    seen = set()
    unique = []
    for state in states:
        if state.key not in seen:
            seen.add(state.key)
            unique.append(state)
    return unique


def _role_pool(domain: DomainDef, states, max_role_complexity: int):
    """Primitive and inverted roles plus their pairwise combinations,
    extensionally deduplicated."""
    prims = [
        PrimRole(p.name) for p in domain.predicates.values() if p.arity == 2
    ]
    prims.sort(key=lambda r: r.canon)
    base: list[Role] = list(prims) + [Inv(r) for r in prims]
    candidates: list[Role] = list(base)
    for left, right in itertools.product(base, base):
        candidates.append(Comp(left, right))
        if left.canon < right.canon:
            candidates.append(RInt(left, right))
        if left.canon != right.canon:
            candidates.append(RDiff(left, right))
    by_sig: dict[tuple, Role] = {}
    for role in sorted(candidates, key=lambda r: (r.complexity, r.canon)):
        if role.complexity > max_role_complexity:
            continue
        sig = tuple(role.denote(s) for s in states)
        if sig not in by_sig:
            by_sig[sig] = role
    return sorted(by_sig.values(), key=lambda r: (r.complexity, r.canon))


def generate_features(
    domain: DomainDef, states, config: BetaConfig
) -> FeaturePool:
    """Bottom-up feature generation with extensional deduplication.

    ``states`` are the sample states used to separate features; duplicates
    are removed first.  Generation proceeds one complexity tier at a time;
    a tier is included only if it finishes within the time budget.  The
    final pool is sorted by (complexity, canonical string) and truncated to
    the configured size.
    """
    start = time.monotonic()
    states = dedupe_states(states)
    if not states:
        raise EmptyPoolError("feature generation needs at least one sample state")

    roles = _role_pool(domain, states, max(config.max_complexity - 2, 0))

    def signature(concept):
        return tuple(concept.denote(s) for s in states)

    concept_sigs: dict[tuple, Concept] = {}
    count_sigs: dict[tuple, Concept] = {}
    tiers: dict[int, list[Concept]] = {}
    completed_tiers = 0

    def admit(tier_candidates, tier):
        survivors = []
        for concept in sorted(tier_candidates, key=lambda c: c.canon):
            sig = signature(concept)
            if sig in concept_sigs:
                continue
            concept_sigs[sig] = concept
            survivors.append(concept)
            counts = tuple(len(ext) for ext in sig)
            if counts not in count_sigs:
                count_sigs[counts] = concept
        tiers[tier] = survivors

    seed: list[Concept] = [Top(), Bot()]
    type_names = sorted(set(domain.types) | set(domain.types.values()) | {ROOT_TYPE})
    seed.extend(TypeConcept(t) for t in type_names)
    seed.extend(
        PrimConcept(p.name) for p in domain.predicates.values() if p.arity == 1
    )
    admit(seed, 1)
    completed_tiers = 1

    for tier in range(2, config.max_complexity + 1):
        if time.monotonic() - start > config.time_limit:
            break
        if len(count_sigs) >= config.feature_limit:
            break
        candidates: list[Concept] = []
        for child in tiers.get(tier - 1, ()):
            candidates.append(Not(child))
        for c1 in range(1, tier - 1):
            c2 = tier - 1 - c1
            if c2 < c1:
                break
            left_tier = tiers.get(c1, ())
            right_tier = tiers.get(c2, ())
            if c1 == c2:
                for i, left in enumerate(left_tier):
                    for right in right_tier[i + 1:]:
                        candidates.append(And(left, right))
                        candidates.append(Or(left, right))
            else:
                for left in left_tier:
                    for right in right_tier:
                        candidates.append(And(left, right))
                        candidates.append(Or(left, right))
        for role in roles:
            child_tier = tier - 1 - role.complexity
            if child_tier < 1:
                continue
            for child in tiers.get(child_tier, ()):
                candidates.append(Some(role, child))
                candidates.append(All(role, child))
        admit(candidates, tier)
        completed_tiers = tier

    features = sorted(
        (Feature(c) for c in count_sigs.values()),
        key=lambda f: (f.complexity, f.canon),
    )[: config.feature_limit]

    meta = {
        "max_complexity": config.max_complexity,
        "time_limit": config.time_limit,
        "feature_limit": config.feature_limit,
        "completed_tiers": completed_tiers,
        "sample_states": len(states),
        "distinct_concepts": len(concept_sigs),
        "generation_seconds": round(time.monotonic() - start, 3),
    }
    return FeaturePool(features=tuple(features), meta=meta)


def model_states_from_trajectories(trajectories, domain: DomainDef):
    """Flatten trajectories into per-trajectory lists of ModelStates."""
    result = []
    for traj in trajectories:
        result.append(
            [ModelState(state, traj.objects, domain) for state in traj.states]
        )
    return result
