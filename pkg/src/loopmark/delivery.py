"""Built-in Delivery domain: one truck ferries packages around a grid.

Cells are named ``c-<x>-<y>`` with 4-neighbor adjacency.  The module ships
the five handcrafted training instances, the three worked-example instances
with their plans, a seeded random-instance generator for benchmarking, and
a hand-written feature set that separates the landmark states of the worked
example.
"""

from __future__ import annotations

import random

from .pddl import DomainDef, Literal, ProblemDef, TypedName, parse_domain

DOMAIN_TEXT = """\
(define (domain delivery)
  (:requirements :strips :typing)
  (:types truck package - locatable locatable cell - object)
  (:predicates
    (at ?x - locatable ?c - cell)
    (carrying ?t - truck ?p - package)
    (empty ?t - truck)
    (adjacent ?a - cell ?b - cell))
  (:action move
    :parameters (?t - truck ?from - cell ?to - cell)
    :precondition (and (at ?t ?from) (adjacent ?from ?to))
    :effect (and (not (at ?t ?from)) (at ?t ?to)))
  (:action pick-up
    :parameters (?t - truck ?p - package ?c - cell)
    :precondition (and (at ?t ?c) (at ?p ?c) (empty ?t))
    :effect (and (not (at ?p ?c)) (not (empty ?t)) (carrying ?t ?p)))
  (:action drop
    :parameters (?t - truck ?p - package ?c - cell)
    :precondition (and (at ?t ?c) (carrying ?t ?p))
    :effect (and (at ?p ?c) (empty ?t) (not (carrying ?t ?p)))))
"""

_DOMAIN = None


def domain() -> DomainDef:
    global _DOMAIN
    if _DOMAIN is None:
        _DOMAIN = parse_domain(DOMAIN_TEXT)
    return _DOMAIN


def cell(x: int, y: int) -> str:
    return f"c-{x}-{y}"


def make_problem(name, width, height, truck, packages) -> ProblemDef:
    """Build a Delivery instance.

    ``truck`` is the truck's start cell as an ``(x, y)`` pair; ``packages``
    is a sequence of ``((sx, sy), (gx, gy))`` start/goal pairs, which get
    named ``p0``, ``p1``, ... in order.
    """
    cells = [cell(x, y) for x in range(width) for y in range(height)]
    objects = [TypedName("t1", "truck")]
    objects += [TypedName(f"p{i}", "package") for i in range(len(packages))]
    objects += [TypedName(c, "cell") for c in sorted(cells)]

    init = {("at", "t1", cell(*truck)), ("empty", "t1")}
    for x in range(width):
        for y in range(height):
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if 0 <= nx < width and 0 <= ny < height:
                    init.add(("adjacent", cell(x, y), cell(nx, ny)))
    goal = []
    for i, (start, target) in enumerate(packages):
        init.add(("at", f"p{i}", cell(*start)))
        goal.append(Literal("at", (f"p{i}", cell(*target)), True))
    return ProblemDef(
        name=name,
        domain_name="delivery",
        objects=tuple(objects),
        init=frozenset(init),
        goal=tuple(goal),
    )


def training_problems() -> dict:
    """The five handcrafted training instances (t01-t05)."""
    return {
        "t01": make_problem("t01", 2, 2, (0, 1), [((1, 1), (1, 0))]),
        "t02": make_problem("t02", 2, 2, (1, 0), [((1, 1), (0, 0)), ((0, 1), (1, 1))]),
        "t03": make_problem("t03", 3, 3, (2, 2), [((2, 1), (1, 1))]),
        "t04": make_problem("t04", 3, 3, (1, 2), [((2, 1), (1, 1)), ((2, 2), (0, 1))]),
        "t05": make_problem(
            "t05",
            3,
            3,
            (0, 2),
            [((2, 1), (0, 1)), ((2, 2), (0, 0)), ((1, 2), (2, 1))],
        ),
    }


def example_problems() -> dict:
    """The three worked-example instances: 1, 2, and 3 packages, all
    delivered to the same cell."""
    return {
        "ex1": make_problem("ex1", 2, 2, (0, 1), [((1, 1), (1, 0))]),
        "ex2": make_problem(
            "ex2", 2, 2, (0, 1), [((1, 1), (1, 0)), ((0, 0), (1, 0))]
        ),
        "ex3": make_problem(
            "ex3",
            3,
            2,
            (0, 1),
            [((1, 1), (1, 0)), ((0, 0), (1, 0)), ((2, 0), (1, 0))],
        ),
    }


EXAMPLE_PLANS = {
    "ex1": (
        "(move t1 c-0-1 c-1-1)",
        "(pick-up t1 p0 c-1-1)",
        "(move t1 c-1-1 c-1-0)",
        "(drop t1 p0 c-1-0)",
    ),
    "ex2": (
        "(move t1 c-0-1 c-1-1)",
        "(pick-up t1 p0 c-1-1)",
        "(move t1 c-1-1 c-1-0)",
        "(drop t1 p0 c-1-0)",
        "(move t1 c-1-0 c-0-0)",
        "(pick-up t1 p1 c-0-0)",
        "(move t1 c-0-0 c-1-0)",
        "(drop t1 p1 c-1-0)",
    ),
    "ex3": (
        "(move t1 c-0-1 c-1-1)",
        "(pick-up t1 p0 c-1-1)",
        "(move t1 c-1-1 c-1-0)",
        "(drop t1 p0 c-1-0)",
        "(move t1 c-1-0 c-0-0)",
        "(pick-up t1 p1 c-0-0)",
        "(move t1 c-0-0 c-1-0)",
        "(drop t1 p1 c-1-0)",
        "(move t1 c-1-0 c-2-0)",
        "(pick-up t1 p2 c-2-0)",
        "(move t1 c-2-0 c-1-0)",
        "(drop t1 p2 c-1-0)",
    ),
}

# Hand-written count features over the annotated (goal-marked) states.
# Their positivity descriptors separate the worked example's landmarks:
#   f1 > 0: the truck is empty
#   f2 > 0: some truck shares its cell with no package
#   f3 > 0: a truck stands on some package's goal cell
#   f4 > 0: an empty truck stands on some package's goal cell
#   f5     : number of packages not yet at their goal cell
HAND_FEATURES = (
    "(count (prim empty))",
    "(count (some at (all (inv at) (type truck))))",
    "(count (some at-goal (some (inv at) (type truck))))",
    "(count (some at-goal (some (inv at) (prim empty))))",
    "(count (some (rdiff at-goal at) top))",
)


def random_instance(width, height, num_packages, seed) -> ProblemDef:
    """Seeded random instance; package goals always differ from starts."""
    rng = random.Random((width, height, num_packages, seed).__repr__())
    all_cells = [(x, y) for x in range(width) for y in range(height)]
    truck = rng.choice(all_cells)
    packages = []
    for _ in range(num_packages):
        start = rng.choice(all_cells)
        target = rng.choice([c for c in all_cells if c != start])
        packages.append((start, target))
    name = f"delivery-{width}x{height}-p{num_packages}-s{seed}"
    return make_problem(name, width, height, truck, packages)
