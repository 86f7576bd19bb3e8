"""Typed STRIPS PDDL: parsing, validation, grounding, and transition semantics.

Supported requirement keys: ``:strips``, ``:typing``, ``:negative-preconditions``,
``:equality``.  Anything else (ADL, conditional effects, numeric fluents,
derived predicates, action costs) is rejected at parse time.

Ground atoms are indexed canonically (lexicographic on predicate name, then
argument names) so that all downstream artifacts are byte-stable across runs.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .errors import (
    GroundingLimitError,
    PddlSyntaxError,
    PlanExecutionError,
    TypeCycleError,
    UnsupportedRequirementError,
    ValidationError,
)

SUPPORTED_REQUIREMENTS = frozenset(
    {":strips", ":typing", ":negative-preconditions", ":equality"}
)

ROOT_TYPE = "object"

# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypedName:
    """A name with its declared type (parameter, object, or constant)."""

    name: str
    type: str = ROOT_TYPE


@dataclass(frozen=True)
class Predicate:
    name: str
    params: tuple[TypedName, ...]

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class Literal:
    """A (possibly negated) atom over variables and/or constants."""

    pred: str
    args: tuple[str, ...]
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.pred, self.args, not self.positive)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[TypedName, ...]
    precondition: tuple[Literal, ...]
    add: tuple[Literal, ...]
    delete: tuple[Literal, ...]


@dataclass(frozen=True)
class DomainDef:
    name: str
    requirements: tuple[str, ...]
    types: dict[str, str]  # type name -> supertype name
    predicates: dict[str, Predicate]  # insertion order = declaration order
    constants: tuple[TypedName, ...]
    actions: tuple[ActionSchema, ...]

    def __post_init__(self):
        _validate_domain(self)

    def supertypes(self, tname: str) -> tuple[str, ...]:
        """The type itself plus all its ancestors up to the root."""
        chain = [tname]
        while tname != ROOT_TYPE:
            tname = self.types.get(tname, ROOT_TYPE)
            chain.append(tname)
        return tuple(chain)


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...]
    init: frozenset[tuple[str, ...]]  # ground atoms as (pred, *args)
    goal: tuple[Literal, ...]


Atom = tuple  # (pred, *args)


def atom_to_str(atom: Atom) -> str:
    return "(" + " ".join(atom) + ")"


def atom_from_str(text: str) -> Atom:
    parts = text.strip().lstrip("(").rstrip(")").split()
    if not parts:
        raise ValidationError(f"empty atom string: {text!r}")
    return tuple(parts)


@dataclass(frozen=True)
class GroundAction:
    """A fully instantiated action over atom indices."""

    name: str  # e.g. "(move t1 c-0-1 c-1-1)"
    pre: frozenset[int]
    neg_pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]


@dataclass(frozen=True)
class GroundTask:
    """The propositional planning substrate for one problem instance."""

    domain: DomainDef
    problem: ProblemDef
    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]
    init: frozenset[int]
    goal: frozenset[int]  # positive goal literals
    goal_neg: frozenset[int]  # negative goal literals
    atom_index: dict[Atom, int] = field(repr=False)
    action_index: dict[str, GroundAction] = field(repr=False)
    static_predicates: frozenset[str] = frozenset()

    def atom_str(self, index: int) -> str:
        return atom_to_str(self.atoms[index])

    def state_to_atoms(self, state: frozenset[int]) -> frozenset[str]:
        return frozenset(self.atom_str(i) for i in state)

    def atoms_to_state(self, atom_strs) -> frozenset[int]:
        state = set()
        for text in atom_strs:
            atom = atom_from_str(text)
            try:
                state.add(self.atom_index[atom])
            except KeyError:
                raise ValidationError(f"unknown atom {text!r} for this task")
        return frozenset(state)


# ---------------------------------------------------------------------------
# Tokenizer / s-expression reader
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|;[^\n]*|[^\s();]+")


class _Token:
    __slots__ = ("value", "line", "column")

    def __init__(self, value, line, column):
        self.value = value
        self.line = line
        self.column = column


def _tokenize(text: str, source=None):
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    for match in _TOKEN_RE.finditer(text):
        start = match.start()
        line += text.count("\n", pos, start)
        nl = text.rfind("\n", 0, start)
        line_start = nl + 1
        pos = start
        value = match.group()
        if value.startswith(";"):
            continue
        tokens.append(_Token(value.lower(), line, start - line_start + 1))
    return tokens


class _Reader:
    def __init__(self, text: str, source=None):
        self.tokens = _tokenize(text, source)
        self.pos = 0
        self.source = source

    def _error(self, message, token=None):
        token = token or (self.tokens[self.pos - 1] if self.pos else None)
        line = token.line if token else None
        col = token.column if token else None
        return PddlSyntaxError(message, line, col, self.source)

    def read(self):
        if self.pos >= len(self.tokens):
            raise self._error("unexpected end of input")
        token = self.tokens[self.pos]
        self.pos += 1
        if token.value == "(":
            items = []
            while True:
                if self.pos >= len(self.tokens):
                    raise self._error("unbalanced '('", token)
                if self.tokens[self.pos].value == ")":
                    self.pos += 1
                    return items
                items.append(self.read())
        if token.value == ")":
            raise self._error("unexpected ')'", token)
        return token.value

    def read_all(self):
        forms = []
        while self.pos < len(self.tokens):
            forms.append(self.read())
        return forms


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_typed_list(items, what) -> tuple[TypedName, ...]:
    """Parse ``a b - t c d - u e`` into TypedName tuples (default type object)."""
    result = []
    pending = []
    it = iter(items)
    for item in it:
        if item == "-":
            try:
                tname = next(it)
            except StopIteration:
                raise ValidationError(f"dangling '-' in {what} list")
            if not isinstance(tname, str):
                raise ValidationError(f"expected type name in {what} list")
            for name in pending:
                result.append(TypedName(name, tname))
            pending = []
        else:
            if not isinstance(item, str):
                raise ValidationError(f"unexpected nested form in {what} list")
            pending.append(item)
    for name in pending:
        result.append(TypedName(name, ROOT_TYPE))
    return tuple(result)


def _parse_literal(form) -> Literal:
    if not isinstance(form, list) or not form:
        raise ValidationError(f"expected literal, got {form!r}")
    if form[0] == "not":
        if len(form) != 2:
            raise ValidationError("'not' takes exactly one literal")
        inner = _parse_literal(form[1])
        if not inner.positive:
            raise ValidationError("double negation is not supported")
        return inner.negate()
    head, *args = form
    if not all(isinstance(a, str) for a in args):
        raise ValidationError(f"nested form inside atom {form!r}")
    return Literal(head, tuple(args), True)


def _parse_conjunction(form) -> tuple[Literal, ...]:
    """A conjunction is (), a single literal, or (and lit...)."""
    if form is None or form == []:
        return ()
    if isinstance(form, list) and form and form[0] == "and":
        return tuple(_parse_literal(item) for item in form[1:])
    return (_parse_literal(form),)


def parse_domain(text: str, source=None) -> DomainDef:
    """Parse a PDDL domain from a character stream."""
    form = _Reader(text, source).read()
    if not (isinstance(form, list) and len(form) >= 2 and form[0] == "define"):
        raise PddlSyntaxError("expected (define (domain ...) ...)", source=source)
    head = form[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "domain"):
        raise PddlSyntaxError("expected (domain NAME)", source=source)
    name = head[1]

    requirements: tuple[str, ...] = ()
    types: dict[str, str] = {}
    predicates: dict[str, Predicate] = {}
    constants: tuple[TypedName, ...] = ()
    actions: list[ActionSchema] = []

    for section in form[2:]:
        if not isinstance(section, list) or not section:
            raise ValidationError(f"unexpected domain section {section!r}")
        key = section[0]
        if key == ":requirements":
            requirements = tuple(section[1:])
            unsupported = [r for r in requirements if r not in SUPPORTED_REQUIREMENTS]
            if unsupported:
                raise UnsupportedRequirementError(
                    f"unsupported requirement(s): {', '.join(unsupported)}"
                )
        elif key == ":types":
            for tn in _parse_typed_list(section[1:], "type"):
                if tn.name == ROOT_TYPE:
                    continue
                types[tn.name] = tn.type
        elif key == ":constants":
            constants = _parse_typed_list(section[1:], "constant")
        elif key == ":predicates":
            for pform in section[1:]:
                if not isinstance(pform, list) or not pform:
                    raise ValidationError(f"bad predicate declaration {pform!r}")
                pname = pform[0]
                if pname in predicates:
                    raise ValidationError(f"duplicate predicate name {pname!r}")
                params = _parse_typed_list(pform[1:], f"predicate {pname}")
                predicates[pname] = Predicate(pname, params)
        elif key == ":action":
            actions.append(_parse_action(section))
        else:
            raise UnsupportedRequirementError(f"unsupported domain section {key!r}")

    return DomainDef(
        name=name,
        requirements=requirements,
        types=types,
        predicates=predicates,
        constants=constants,
        actions=tuple(actions),
    )


def _parse_action(section) -> ActionSchema:
    if len(section) < 2 or not isinstance(section[1], str):
        raise ValidationError("action without a name")
    name = section[1]
    params: tuple[TypedName, ...] = ()
    precondition: tuple[Literal, ...] = ()
    add: list[Literal] = []
    delete: list[Literal] = []
    i = 2
    while i < len(section):
        key = section[i]
        if i + 1 >= len(section):
            raise ValidationError(f"action {name}: missing value for {key}")
        value = section[i + 1]
        if key == ":parameters":
            params = _parse_typed_list(value, f"action {name} parameter")
        elif key == ":precondition":
            precondition = _parse_conjunction(value)
        elif key == ":effect":
            for lit in _parse_conjunction(value):
                (add if lit.positive else delete).append(lit.negate() if not lit.positive else lit)
        else:
            raise ValidationError(f"action {name}: unsupported key {key}")
        i += 2
    return ActionSchema(name, params, precondition, tuple(add), tuple(delete))


def parse_problem(text: str, domain: DomainDef, source=None) -> ProblemDef:
    """Parse a PDDL problem and validate it against its domain."""
    form = _Reader(text, source).read()
    if not (isinstance(form, list) and len(form) >= 2 and form[0] == "define"):
        raise PddlSyntaxError("expected (define (problem ...) ...)", source=source)
    head = form[1]
    if not (isinstance(head, list) and len(head) == 2 and head[0] == "problem"):
        raise PddlSyntaxError("expected (problem NAME)", source=source)
    name = head[1]

    domain_name = None
    objects: tuple[TypedName, ...] = ()
    init: set[tuple[str, ...]] = set()
    goal: tuple[Literal, ...] = ()

    for section in form[2:]:
        if not isinstance(section, list) or not section:
            raise ValidationError(f"unexpected problem section {section!r}")
        key = section[0]
        if key == ":domain":
            domain_name = section[1]
        elif key == ":objects":
            objects = _parse_typed_list(section[1:], "object")
        elif key == ":init":
            for aform in section[1:]:
                lit = _parse_literal(aform)
                if not lit.positive:
                    raise ValidationError("negative literals are not allowed in :init")
                init.add((lit.pred, *lit.args))
        elif key == ":goal":
            goal = _parse_conjunction(section[1])
        else:
            raise UnsupportedRequirementError(f"unsupported problem section {key!r}")

    problem = ProblemDef(
        name=name,
        domain_name=domain_name or domain.name,
        objects=objects,
        init=frozenset(init),
        goal=goal,
    )
    _validate_problem(problem, domain)
    return problem


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _known_types(domain: DomainDef):
    return set(domain.types) | {t for t in domain.types.values()} | {ROOT_TYPE}


def _validate_domain(domain: DomainDef) -> None:
    known = _known_types(domain)
    # Cycle check: walk each type to the root.
    for tname in domain.types:
        seen = {tname}
        current = tname
        while current != ROOT_TYPE:
            current = domain.types.get(current, ROOT_TYPE)
            if current in seen:
                raise TypeCycleError(f"type hierarchy cycle through {current!r}")
            seen.add(current)
    for pred in domain.predicates.values():
        for param in pred.params:
            if param.type not in known:
                raise ValidationError(
                    f"predicate {pred.name}: unknown type {param.type!r}"
                )
    for const in domain.constants:
        if const.type not in known:
            raise ValidationError(f"constant {const.name}: unknown type {const.type!r}")
    for action in domain.actions:
        scope = {p.name for p in action.params} | {c.name for c in domain.constants}
        for param in action.params:
            if param.type not in known:
                raise ValidationError(
                    f"action {action.name}: unknown type {param.type!r}"
                )
        for lit in action.precondition + action.add + action.delete:
            if lit.pred == "=":
                if len(lit.args) != 2:
                    raise ValidationError("'=' takes exactly two arguments")
            elif lit.pred not in domain.predicates:
                raise ValidationError(
                    f"action {action.name}: undefined predicate {lit.pred!r}"
                )
            elif len(lit.args) != domain.predicates[lit.pred].arity:
                raise ValidationError(
                    f"action {action.name}: arity mismatch for {lit.pred!r}"
                )
            for arg in lit.args:
                if arg.startswith("?") and arg not in scope:
                    raise ValidationError(
                        f"action {action.name}: unbound variable {arg!r}"
                    )
        for lit in action.add + action.delete:
            if lit.pred == "=":
                raise ValidationError("'=' cannot appear in effects")
            for arg in lit.args:
                if not arg.startswith("?") and arg not in scope:
                    raise ValidationError(
                        f"action {action.name}: effect uses unknown constant {arg!r}"
                    )


def _validate_problem(problem: ProblemDef, domain: DomainDef) -> None:
    known = _known_types(domain)
    object_names = {o.name for o in problem.objects} | {
        c.name for c in domain.constants
    }
    for obj in problem.objects:
        if obj.type not in known:
            raise ValidationError(f"object {obj.name}: unknown type {obj.type!r}")
    for atom in problem.init:
        pred = domain.predicates.get(atom[0])
        if pred is None:
            raise ValidationError(f"init uses undefined predicate {atom[0]!r}")
        if len(atom) - 1 != pred.arity:
            raise ValidationError(f"init atom {atom_to_str(atom)}: arity mismatch")
        for arg in atom[1:]:
            if arg not in object_names:
                raise ValidationError(f"init references unknown object {arg!r}")
    for lit in problem.goal:
        if lit.pred == "=":
            raise ValidationError("'=' is not allowed in goals")
        pred = domain.predicates.get(lit.pred)
        if pred is None:
            raise ValidationError(f"goal uses undefined predicate {lit.pred!r}")
        if len(lit.args) != pred.arity:
            raise ValidationError(f"goal literal {lit.pred}: arity mismatch")
        for arg in lit.args:
            if arg not in object_names:
                raise ValidationError(f"goal references unknown object {arg!r}")


# ---------------------------------------------------------------------------
# Printing (inverse of parsing for the supported subset)
# ---------------------------------------------------------------------------


def _format_typed_list(items) -> str:
    return " ".join(f"{it.name} - {it.type}" for it in items)


def _format_literal(lit: Literal) -> str:
    body = "(" + " ".join((lit.pred, *lit.args)) + ")"
    return body if lit.positive else f"(not {body})"


def _format_conjunction(lits) -> str:
    if not lits:
        return "(and)"
    if len(lits) == 1:
        return _format_literal(lits[0])
    return "(and " + " ".join(_format_literal(l) for l in lits) + ")"


def domain_to_pddl(domain: DomainDef) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        types = " ".join(f"{t} - {s}" for t, s in domain.types.items())
        lines.append(f"  (:types {types})")
    if domain.constants:
        lines.append(f"  (:constants {_format_typed_list(domain.constants)})")
    preds = []
    for pred in domain.predicates.values():
        params = _format_typed_list(pred.params)
        preds.append(f"({pred.name}{' ' + params if params else ''})")
    lines.append("  (:predicates " + " ".join(preds) + ")")
    for action in domain.actions:
        effects = list(action.add) + [lit.negate() for lit in action.delete]
        lines.append(
            "  (:action {name}\n"
            "    :parameters ({params})\n"
            "    :precondition {pre}\n"
            "    :effect {eff})".format(
                name=action.name,
                params=_format_typed_list(action.params),
                pre=_format_conjunction(action.precondition),
                eff=_format_conjunction(effects),
            )
        )
    lines.append(")")
    return "\n".join(lines) + "\n"


def problem_to_pddl(problem: ProblemDef) -> str:
    lines = [
        f"(define (problem {problem.name})",
        f"  (:domain {problem.domain_name})",
        f"  (:objects {_format_typed_list(problem.objects)})",
    ]
    init = " ".join(atom_to_str(a) for a in sorted(problem.init))
    lines.append(f"  (:init {init})")
    lines.append(f"  (:goal {_format_conjunction(problem.goal)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------


def objects_by_type(domain: DomainDef, problem: ProblemDef) -> dict[str, tuple[str, ...]]:
    """All objects (constants included) per type, with supertype closure."""
    buckets: dict[str, set[str]] = {}
    for obj in tuple(problem.objects) + tuple(domain.constants):
        for tname in domain.supertypes(obj.type):
            buckets.setdefault(tname, set()).add(obj.name)
    return {t: tuple(sorted(names)) for t, names in buckets.items()}


def static_predicates(domain: DomainDef) -> frozenset[str]:
    """Predicates never occurring in any effect."""
    dynamic = set()
    for action in domain.actions:
        for lit in action.add + action.delete:
            dynamic.add(lit.pred)
    return frozenset(set(domain.predicates) - dynamic)


def ground(
    domain: DomainDef,
    problem: ProblemDef,
    max_atoms: int = 2_000_000,
    max_actions: int = 2_000_000,
) -> GroundTask:
    """Instantiate the full typed atom universe and all applicable-ever actions.

    Actions whose static preconditions (predicates never touched by effects)
    are false in the initial state are dropped.
    """
    by_type = objects_by_type(domain, problem)
    statics = static_predicates(domain)

    atoms: list[Atom] = []
    for pred in domain.predicates.values():
        pools = [by_type.get(p.type, ()) for p in pred.params]
        count = 1
        for pool in pools:
            count *= len(pool)
        if len(atoms) + count > max_atoms:
            raise GroundingLimitError(
                f"atom universe exceeds cap of {max_atoms} atoms"
            )
        for combo in itertools.product(*pools):
            atoms.append((pred.name, *combo))
    atoms.sort()
    atom_index = {atom: i for i, atom in enumerate(atoms)}

    init_atoms = problem.init
    actions: list[GroundAction] = []
    for schema in domain.actions:
        pools = [by_type.get(p.type, ()) for p in schema.params]
        names = [p.name for p in schema.params]
        for combo in itertools.product(*pools):
            binding = dict(zip(names, combo))
            ground_action = _ground_action(
                schema, binding, atom_index, init_atoms, statics
            )
            if ground_action is not None:
                actions.append(ground_action)
                if len(actions) > max_actions:
                    raise GroundingLimitError(
                        f"ground action set exceeds cap of {max_actions}"
                    )
    actions.sort(key=lambda a: a.name)

    init = frozenset(atom_index[a] for a in init_atoms)
    goal_pos = set()
    goal_neg = set()
    for lit in problem.goal:
        idx = atom_index[(lit.pred, *lit.args)]
        (goal_pos if lit.positive else goal_neg).add(idx)

    return GroundTask(
        domain=domain,
        problem=problem,
        atoms=tuple(atoms),
        actions=tuple(actions),
        init=init,
        goal=frozenset(goal_pos),
        goal_neg=frozenset(goal_neg),
        atom_index=atom_index,
        action_index={a.name: a for a in actions},
        static_predicates=statics,
    )


def _ground_action(schema, binding, atom_index, init_atoms, statics):
    def subst(arg):
        return binding.get(arg, arg) if arg.startswith("?") else arg

    pre, neg_pre = set(), set()
    for lit in schema.precondition:
        args = tuple(subst(a) for a in lit.args)
        if lit.pred == "=":
            if (args[0] == args[1]) != lit.positive:
                return None
            continue
        atom = (lit.pred, *args)
        if lit.pred in statics:
            # Static facts never change: resolve them now and drop them
            # from the ground precondition.
            if (atom in init_atoms) != lit.positive:
                return None
            continue
        idx = atom_index.get(atom)
        if idx is None:
            return None
        (pre if lit.positive else neg_pre).add(idx)

    add, delete = set(), set()
    for lit in schema.add:
        add.add(atom_index[(lit.pred, *(subst(a) for a in lit.args))])
    for lit in schema.delete:
        delete.add(atom_index[(lit.pred, *(subst(a) for a in lit.args))])
    delete -= add  # add effects win; keeps add and delete disjoint

    name = "(" + " ".join((schema.name, *(subst(p) for p in binding))) + ")"
    return GroundAction(
        name=name,
        pre=frozenset(pre),
        neg_pre=frozenset(neg_pre),
        add=frozenset(add),
        delete=frozenset(delete),
    )


# ---------------------------------------------------------------------------
# Transition semantics
# ---------------------------------------------------------------------------


def applicable(state: frozenset[int], action: GroundAction) -> bool:
    return action.pre <= state and not (action.neg_pre & state)


def apply(state: frozenset[int], action: GroundAction) -> frozenset[int]:
    """Successor state; raises if the precondition does not hold."""
    if not applicable(state, action):
        raise PlanExecutionError(f"action {action.name} is inapplicable")
    return (state - action.delete) | action.add


def goal_satisfied(state: frozenset[int], task: GroundTask) -> bool:
    return task.goal <= state and not (task.goal_neg & state)
