"""Command-line driver: solve instances, build trajectories, discover
landmark graphs, plan with them, and run batch benchmarks.

Exit codes: 0 success, 1 error, 2 unsolvable, 3 resource limit reached.
File outputs are byte-identical for identical inputs and configuration;
wall-time figures go to stderr or plan-file comments only.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .discovery import discover_graph, load_graph, satisfies_trace
from .errors import FingerprintMismatchError, LoopmarkError, ResourceLimitError
from .features import (
    BETA_PRESETS,
    BetaConfig,
    generate_features,
    model_states_from_trajectories,
    parse_feature,
)
from .pddl import ground, parse_domain, parse_problem
from .search import CombinedHeuristic, LMGHeuristic, make_helper, plan
from .statefns import PHI_PRESETS, FunctionTable, preprocess
from .trajectory import (
    TrajectorySet,
    annotate_and_ground,
    domain_fingerprint,
    execute_plan,
    load_trajectory_set,
    parse_plan,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSOLVABLE = 2
EXIT_RESOURCE = 3

# Exit code 2 is reserved for "search proved the task unsolvable"; route
# usage errors (bad flags, missing files) to the generic error code instead.
click.UsageError.exit_code = EXIT_ERROR

_STATUS_EXIT = {
    "solved": EXIT_OK,
    "unsolvable": EXIT_UNSOLVABLE,
    "resource-limit": EXIT_RESOURCE,
}


def _fail(message, code=EXIT_ERROR):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(exc)


def _write_text(path, text):
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _plan_text(plan_actions, stats) -> str:
    lines = list(plan_actions)
    lines.append(f"; expanded={stats.expanded}")
    lines.append(f"; evaluated={stats.evaluated}")
    lines.append(f"; plan_length={stats.plan_length}")
    lines.append(f"; wall_time={stats.wall_time:.4f}")
    return "\n".join(lines) + "\n"


def _finish_search(plan_actions, stats, out):
    click.echo(json.dumps(stats.to_json(), sort_keys=True), err=True)
    if stats.status != "solved":
        sys.exit(_STATUS_EXIT[stats.status])
    _write_text(out, _plan_text(plan_actions, stats))
    sys.exit(EXIT_OK)


@click.group()
def main():
    """Generalized-landmark planning toolkit."""


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


@main.command()
@click.argument("domain_file", type=click.Path(exists=True))
@click.argument("problem_file", type=click.Path(exists=True))
@click.option("--helper", default="hadd", type=click.Choice(["hadd", "hmax", "goalcount"]))
@click.option("--strategy", default="greedy", type=click.Choice(["greedy", "astar"]))
@click.option("--timeout", type=float, default=None, help="Seconds before giving up.")
@click.option("--max-expansions", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Plan file (default: stdout).")
def solve(domain_file, problem_file, helper, strategy, timeout, max_expansions, out):
    """Find a plan with a helper heuristic alone."""
    try:
        domain = parse_domain(_read_text(domain_file))
        problem = parse_problem(_read_text(problem_file), domain)
        task = ground(domain, problem)
        heuristic = make_helper(helper, task)
        plan_actions, stats = plan(
            task,
            heuristic,
            strategy=strategy,
            timeout=timeout,
            max_expansions=max_expansions,
        )
    except LoopmarkError as exc:
        _fail(exc)
    _finish_search(plan_actions, stats, out)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@main.command()
@click.argument("domain_file", type=click.Path(exists=True))
@click.option("--problem", "problems", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--plan", "plans", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Trajectory JSON (default: stdout).")
def trajectories(domain_file, problems, plans, out):
    """Execute plans into goal-annotated state trajectories."""
    if len(problems) != len(plans):
        _fail(f"{len(problems)} problems but {len(plans)} plans")
    try:
        domain = parse_domain(_read_text(domain_file))
        annotated_domain = None
        trajs = []
        for problem_file, plan_file in zip(problems, plans):
            problem = parse_problem(_read_text(problem_file), domain)
            task = annotate_and_ground(domain, problem)
            if annotated_domain is not None:
                previous = domain_fingerprint(annotated_domain)
                if previous != domain_fingerprint(task.domain):
                    raise FingerprintMismatchError(
                        f"{problem.name} annotates the domain differently from "
                        "earlier problems (its goal uses different predicates)"
                    )
            annotated_domain = task.domain
            steps = parse_plan(_read_text(plan_file))
            trajs.append(execute_plan(task, steps, task_id=problem.name))
        ts = TrajectorySet(domain=annotated_domain, trajectories=tuple(trajs))
    except LoopmarkError as exc:
        _fail(exc)
    _write_text(out, ts.dumps())
    sys.exit(EXIT_OK)


# ---------------------------------------------------------------------------
# discover
# ---------------------------------------------------------------------------

_VOLATILE_PROVENANCE = ("discovery_seconds", "generation_seconds")


@main.command()
@click.argument("trajectory_file", type=click.Path(exists=True))
@click.option("--beta", default="b1", type=click.Choice(sorted(BETA_PRESETS)))
@click.option("--preprocess", "phi", default="phi4", type=click.Choice(sorted(PHI_PRESETS)))
@click.option("--max-complexity", type=int, default=None, help="Override the beta preset.")
@click.option("--feature-limit", type=int, default=None, help="Override the beta preset.")
@click.option("--timeout", type=float, default=None, help="Budget for generation + discovery.")
@click.option("--out", type=click.Path(), default=None, help="Graph JSON (default: stdout).")
@click.option("--dot", type=click.Path(), default=None, help="Also write a DOT rendering.")
def discover(trajectory_file, beta, phi, max_complexity, feature_limit, timeout, out, dot):
    """Discover a generalized-landmark graph from trajectories."""
    started = time.monotonic()
    try:
        ts = load_trajectory_set(trajectory_file)
        preset = BETA_PRESETS[beta]
        config = BetaConfig(
            max_complexity=max_complexity or preset.max_complexity,
            time_limit=timeout or preset.time_limit,
            feature_limit=feature_limit or preset.feature_limit,
        )
        state_lists = model_states_from_trajectories(ts.trajectories, ts.domain)
        flat = [state for states in state_lists for state in states]
        pool = generate_features(ts.domain, flat, config)
        click.echo(
            f"pool: {len(pool.features)} features "
            f"(tiers completed: {pool.meta['completed_tiers']}, "
            f"{pool.meta['generation_seconds']}s)",
            err=True,
        )
        table = FunctionTable.from_features(pool.features, state_lists)
        result = preprocess(table, PHI_PRESETS[phi])
        removed = ", ".join(
            f"rule {rule}: -{len(gone)}" for rule, gone in sorted(result.removed.items())
        )
        click.echo(f"preprocess {phi}: {len(result.kept)} kept ({removed})", err=True)
        remaining = None if timeout is None else timeout - (time.monotonic() - started)
        if remaining is not None and remaining <= 0:
            raise ResourceLimitError("time budget exhausted before discovery")
        provenance = {
            "domain_fingerprint": ts.fingerprint,
            "beta": beta,
            "preprocess": phi,
            "pool_before": len(pool.features),
            "pool_after": len(result.kept),
            "trajectories": [t.task_id for t in ts.trajectories],
        }
        graph = discover_graph(result.table, provenance, time_limit=remaining)
        click.echo(
            f"discovery: {len(graph.nodes)} nodes, {len(graph.loop_edges)} loops "
            f"({graph.provenance['discovery_seconds']}s)",
            err=True,
        )
        for key in _VOLATILE_PROVENANCE:
            graph.provenance.pop(key, None)
    except ResourceLimitError as exc:
        _fail(exc, EXIT_RESOURCE)
    except LoopmarkError as exc:
        _fail(exc)
    _write_text(out, graph.dumps())
    if dot is not None:
        _write_text(dot, graph.to_dot())
    sys.exit(EXIT_OK)


# ---------------------------------------------------------------------------
# plan (with a landmark graph)
# ---------------------------------------------------------------------------


@main.command("plan")
@click.argument("domain_file", type=click.Path(exists=True))
@click.argument("problem_file", type=click.Path(exists=True))
@click.argument("graph_file", type=click.Path(exists=True))
@click.option("--helper", default="hadd", type=click.Choice(["hadd", "hmax", "goalcount"]))
@click.option("--prune/--no-prune", default=True, help="Commit to loop traversals.")
@click.option("--strategy", default="greedy", type=click.Choice(["greedy", "astar"]))
@click.option("--timeout", type=float, default=None)
@click.option("--max-expansions", type=int, default=None)
@click.option("--out", type=click.Path(), default=None, help="Plan file (default: stdout).")
def plan_cmd(domain_file, problem_file, graph_file, helper, prune, strategy,
             timeout, max_expansions, out):
    """Find a plan with the landmark-graph heuristic plus a helper."""
    try:
        domain = parse_domain(_read_text(domain_file))
        problem = parse_problem(_read_text(problem_file), domain)
        graph = load_graph(graph_file)
        task = annotate_and_ground(domain, problem)
        expected = graph.provenance.get("domain_fingerprint")
        actual = domain_fingerprint(task.domain)
        if expected is not None and expected != actual:
            raise FingerprintMismatchError(
                "graph was discovered for a different domain "
                f"({str(expected)[:12]}... vs {actual[:12]}...)"
            )
        heuristic = CombinedHeuristic(
            make_helper(helper, task), LMGHeuristic(graph, task)
        )
        plan_actions, stats = plan(
            task,
            heuristic,
            strategy=strategy,
            prune=prune,
            timeout=timeout,
            max_expansions=max_expansions,
        )
    except LoopmarkError as exc:
        _fail(exc)
    _finish_search(plan_actions, stats, out)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_run(payload):
    """One benchmark job; runs in a worker process and never raises."""
    started = time.monotonic()
    row = {
        "instance": payload["instance_name"],
        "heuristic": payload["config_name"],
        "expanded": "",
        "plan_length": "",
        "time": "",
        "status": "error",
    }
    try:
        domain = parse_domain(Path(payload["domain"]).read_text(encoding="utf-8"))
        problem = parse_problem(
            Path(payload["instance"]).read_text(encoding="utf-8"), domain
        )
        if payload.get("graph"):
            graph = load_graph(payload["graph"])
            task = annotate_and_ground(domain, problem)
            heuristic = CombinedHeuristic(
                make_helper(payload["helper"], task), LMGHeuristic(graph, task)
            )
        else:
            task = ground(domain, problem)
            heuristic = make_helper(payload["helper"], task)
        plan_actions, stats = plan(
            task,
            heuristic,
            prune=payload.get("prune", False),
            timeout=payload.get("timeout"),
            max_expansions=payload.get("max_expansions"),
        )
        del plan_actions
        row["status"] = stats.status
        row["expanded"] = stats.expanded
        row["time"] = round(stats.wall_time, 3)
        if stats.status == "solved":
            row["plan_length"] = stats.plan_length
    except Exception as exc:  # recorded, never aborts the batch
        row["time"] = round(time.monotonic() - started, 3)
        row["message"] = str(exc)
    return row


_CSV_COLUMNS = ("instance", "heuristic", "expanded", "plan_length", "time", "status")


@main.command()
@click.argument("manifest_file", type=click.Path(exists=True))
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="CSV (default: stdout).")
def bench(manifest_file, jobs, out):
    """Run the instance x heuristic-config cross-product of a manifest.

    The manifest is JSON: {"domain": path, "instances": [path, ...],
    "configs": [{"name", "helper", "graph"?, "prune"?}, ...],
    "timeout"?: seconds, "max_expansions"?: N}.  Paths are relative to
    the manifest file.
    """
    try:
        manifest = json.loads(_read_text(manifest_file))
    except json.JSONDecodeError as exc:
        _fail(f"manifest is not valid JSON: {exc}")
    base = Path(manifest_file).resolve().parent

    def resolve(path):
        p = Path(path)
        return str(p if p.is_absolute() else base / p)

    try:
        domain_path = resolve(manifest["domain"])
        instances = [resolve(p) for p in manifest["instances"]]
        configs = list(manifest["configs"])
    except (KeyError, TypeError) as exc:
        _fail(f"manifest is missing required key: {exc}")
    payloads = []
    for instance in instances:
        for config in configs:
            if "name" not in config or "helper" not in config:
                _fail("each config needs at least 'name' and 'helper'")
            payloads.append(
                {
                    "domain": domain_path,
                    "instance": instance,
                    "instance_name": Path(instance).stem,
                    "config_name": config["name"],
                    "helper": config["helper"],
                    "graph": resolve(config["graph"]) if config.get("graph") else None,
                    "prune": bool(config.get("prune", False)),
                    "timeout": manifest.get("timeout"),
                    "max_expansions": manifest.get("max_expansions"),
                }
            )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_run, payloads))
    else:
        rows = [_bench_run(payload) for payload in payloads]

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_CSV_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        if row.get("message"):
            click.echo(f"{row['instance']}/{row['heuristic']}: {row['message']}", err=True)
        writer.writerow(row)
    _write_text(out, buffer.getvalue())

    solved = {}
    for row in rows:
        done, total = solved.get(row["heuristic"], (0, 0))
        solved[row["heuristic"]] = (done + (row["status"] == "solved"), total + 1)
    for name in sorted(solved):
        done, total = solved[name]
        click.echo(f"summary: {name} solved {done}/{total}", err=True)
    sys.exit(EXIT_OK)


# ---------------------------------------------------------------------------
# export-dot / validate
# ---------------------------------------------------------------------------


@main.command("export-dot")
@click.argument("graph_file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="DOT file (default: stdout).")
def export_dot(graph_file, out):
    """Render a landmark-graph JSON file as GraphViz DOT."""
    try:
        graph = load_graph(graph_file)
    except LoopmarkError as exc:
        _fail(exc)
    _write_text(out, graph.to_dot())
    sys.exit(EXIT_OK)


@main.group()
def validate():
    """Consistency checks for plans and landmark graphs."""


@validate.command("plan")
@click.argument("domain_file", type=click.Path(exists=True))
@click.argument("problem_file", type=click.Path(exists=True))
@click.argument("plan_file", type=click.Path(exists=True))
def validate_plan(domain_file, problem_file, plan_file):
    """Execute a plan file and check that it reaches the goal."""
    try:
        domain = parse_domain(_read_text(domain_file))
        problem = parse_problem(_read_text(problem_file), domain)
        task = ground(domain, problem)
        steps = parse_plan(_read_text(plan_file))
        execute_plan(task, steps, task_id=problem.name)
    except LoopmarkError as exc:
        _fail(exc)
    click.echo(f"plan valid: {len(steps)} steps reach the goal")
    sys.exit(EXIT_OK)


@validate.command("graph")
@click.argument("graph_file", type=click.Path(exists=True))
@click.argument("trajectory_file", type=click.Path(exists=True))
def validate_graph(graph_file, trajectory_file):
    """Check that every trajectory in a set satisfies a landmark graph."""
    try:
        ts = load_trajectory_set(trajectory_file)
        graph = load_graph(graph_file)
        stated = graph.provenance.get("domain_fingerprint")
        if stated is not None and stated != ts.fingerprint:
            raise FingerprintMismatchError(
                "graph and trajectory set disagree on the domain"
            )
        features = [parse_feature(name) for name in graph.feature_names()]
        table = FunctionTable.from_features(
            features, model_states_from_trajectories(ts.trajectories, ts.domain)
        )
        failures = 0
        for t, traj in enumerate(ts.trajectories):
            trace = satisfies_trace(graph, table, t)
            mark = "ok" if trace.ok else f"FAIL ({trace.reason})"
            click.echo(f"{traj.task_id}: {mark}")
            failures += 0 if trace.ok else 1
    except LoopmarkError as exc:
        _fail(exc)
    if failures:
        _fail(f"{failures} trajectories do not satisfy the graph")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
