#!/usr/bin/env python3
"""Micro-benchmark of the two kernel backends (pure Python vs compiled).

Times the delete-relaxation heuristics, successor generation, and a whole
greedy search over identical inputs, then prints a comparison table.

Usage: python3 benchmarks/kernel_benchmark.py [--repeats N]
"""

import argparse
import random
import statistics
import time

from loopmark import delivery
from loopmark._kernels import (
    available_backends,
    make_relaxation_core,
    make_successor_core,
    state_mask,
)
from loopmark.pddl import apply as pddl_apply
from loopmark.search import RelaxationHeuristic, plan
from loopmark.trajectory import annotate_and_ground


def sample_states(task, count, seed=0):
    rng = random.Random(seed)
    states = [task.init]
    state = task.init
    while len(states) < count:
        actions = [
            a for a in task.actions
            if a.pre <= state and not (a.neg_pre & state)
        ]
        if not actions:
            state = task.init
            continue
        state = pddl_apply(state, rng.choice(actions))
        states.append(state)
    return states


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times), statistics.mean(times)


def bench_task(label, task, repeats):
    masks = [
        state_mask(len(task.atoms), state)
        for state in sample_states(task, 300, seed=7)
    ]
    rows = []
    for backend in available_backends():
        add_core = make_relaxation_core(task, "add", backend)
        succ_core = make_successor_core(task, backend)

        def eval_all():
            for mask in masks:
                add_core.value(mask)

        def costs_all():
            for mask in masks[:50]:
                add_core.costs(mask)

        def successors_all():
            for mask in masks:
                succ_core.applicable(mask)

        def whole_search():
            plan(task, RelaxationHeuristic(task, "add", backend))

        for name, fn in (
            ("hadd value x300", eval_all),
            ("hadd costs x50", costs_all),
            ("successors x300", successors_all),
            ("greedy search", whole_search),
        ):
            best, mean = best_of(repeats, fn)
            rows.append((backend, name, best, mean))
    print(f"\n== {label}: {len(task.atoms)} atoms, {len(task.actions)} actions ==")
    print(f"{'backend':<10} {'workload':<18} {'best (ms)':>10} {'mean (ms)':>10}")
    speedups = {}
    for backend, name, best, mean in rows:
        print(f"{backend:<10} {name:<18} {best * 1e3:>10.2f} {mean * 1e3:>10.2f}")
        speedups.setdefault(name, {})[backend] = best
    for name, by_backend in speedups.items():
        if {"pure", "compiled"} <= set(by_backend):
            ratio = by_backend["pure"] / by_backend["compiled"]
            print(f"  -> {name}: compiled is {ratio:.1f}x faster")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if "compiled" not in available_backends():
        print("note: compiled backend unavailable; timing pure backend only")

    domain = delivery.domain()
    tasks = {
        "training t05": delivery.training_problems()["t05"],
        "random 5x5, 3 packages": delivery.random_instance(5, 5, 3, seed=18),
        "random 8x8, 4 packages": delivery.random_instance(8, 8, 4, seed=42),
    }
    for label, problem in tasks.items():
        bench_task(label, annotate_and_ground(domain, problem), args.repeats)


if __name__ == "__main__":
    main()
