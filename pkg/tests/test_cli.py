"""End-to-end CLI contract: subcommands, exit codes, determinism, and
file formats, driven through the installed ``loopmark`` entry point."""

import json
import shutil
import subprocess

import pytest

from loopmark import delivery
from loopmark.pddl import domain_to_pddl, problem_to_pddl
from loopmark.search import make_helper, plan
from loopmark.trajectory import annotate_and_ground, load_trajectory_set

LOOPMARK = shutil.which("loopmark")

pytestmark = pytest.mark.skipif(
    LOOPMARK is None, reason="loopmark console script not installed"
)

EXIT_OK, EXIT_ERROR, EXIT_UNSOLVABLE, EXIT_RESOURCE = 0, 1, 2, 3


def run(*args, cwd):
    return subprocess.run(
        [LOOPMARK, *map(str, args)], cwd=cwd, capture_output=True, text=True
    )


@pytest.fixture(scope="module")
def ws(tmp_path_factory, domain):
    """Workspace with the domain, training instances, and solved plans."""
    root = tmp_path_factory.mktemp("cli")
    (root / "domain.pddl").write_text(domain_to_pddl(domain))
    for name, problem in delivery.training_problems().items():
        (root / f"{name}.pddl").write_text(problem_to_pddl(problem))
        task = annotate_and_ground(domain, problem)
        actions, stats = plan(task, make_helper("hadd", task))
        assert stats.status == "solved"
        lines = list(actions) + ["; solver: test fixture"]
        (root / f"{name}.plan").write_text("\n".join(lines) + "\n")
    (root / "big.pddl").write_text(
        problem_to_pddl(delivery.random_instance(4, 4, 2, seed=3))
    )
    (root / "unsolvable.pddl").write_text(
        """(define (problem stuck) (:domain delivery)
             (:objects t1 - truck p0 - package c-0-0 c-9-9 - cell)
             (:init (at t1 c-0-0) (at p0 c-0-0) (empty t1))
             (:goal (and (at p0 c-9-9))))"""
    )
    return root


@pytest.fixture(scope="module")
def training_json(ws):
    args = ["trajectories", "domain.pddl"]
    for name in delivery.training_problems():
        args += ["--problem", f"{name}.pddl", "--plan", f"{name}.plan"]
    result = run(*args, "--out", "training.json", cwd=ws)
    assert result.returncode == EXIT_OK, result.stderr
    return ws / "training.json"


@pytest.fixture(scope="module")
def graph_json(ws, training_json):
    result = run(
        "discover", training_json.name, "--beta", "b1", "--preprocess", "phi4",
        "--out", "graph.json", cwd=ws,
    )
    assert result.returncode == EXIT_OK, result.stderr
    return ws / "graph.json"


def test_solve_writes_plan_with_stats_footer(ws):
    result = run("solve", "domain.pddl", "t01.pddl", "--out", "out.plan", cwd=ws)
    assert result.returncode == EXIT_OK, result.stderr
    lines = (ws / "out.plan").read_text().splitlines()
    actions = [l for l in lines if not l.startswith(";")]
    comments = [l for l in lines if l.startswith(";")]
    assert len(actions) == 4
    assert all(a.startswith("(") and a.endswith(")") for a in actions)
    assert any("plan_length=4" in c for c in comments)
    stats = json.loads(result.stderr.strip().splitlines()[-1])
    assert stats["status"] == "solved"
    assert stats["plan_length"] == 4


def test_trajectories_output_loads_and_fingerprints(training_json):
    ts = load_trajectory_set(training_json)
    assert [t.task_id for t in ts.trajectories] == [
        "t01", "t02", "t03", "t04", "t05",
    ]
    assert len(ts.fingerprint) == 64


def test_trajectories_count_mismatch_errors(ws):
    result = run(
        "trajectories", "domain.pddl", "--problem", "t01.pddl",
        "--plan", "t01.plan", "--plan", "t02.plan", cwd=ws,
    )
    assert result.returncode == EXIT_ERROR
    assert "1 problems but 2 plans" in result.stderr


def test_discover_is_deterministic_and_logs_pool_sizes(ws, training_json, graph_json):
    result = run(
        "discover", training_json.name, "--beta", "b1", "--preprocess", "phi4",
        "--out", "graph2.json", cwd=ws,
    )
    assert result.returncode == EXIT_OK
    assert (ws / "graph2.json").read_bytes() == graph_json.read_bytes()
    assert "pool:" in result.stderr
    assert "preprocess phi4:" in result.stderr
    assert "discovery:" in result.stderr
    data = json.loads(graph_json.read_text())
    assert len(data["nodes"]) in (4, 5)
    assert len(data["loop_edges"]) == 1
    assert "discovery_seconds" not in data["provenance"]
    assert data["provenance"]["beta"] == "b1"


def test_plan_with_graph_round_trips_into_trajectories(ws, graph_json):
    result = run(
        "plan", "domain.pddl", "big.pddl", graph_json.name,
        "--helper", "hadd", "--prune", "--out", "big.plan", cwd=ws,
    )
    assert result.returncode == EXIT_OK, result.stderr
    check = run("validate", "plan", "domain.pddl", "big.pddl", "big.plan", cwd=ws)
    assert check.returncode == EXIT_OK, check.stderr
    assert "reach the goal" in check.stdout
    # the emitted plan file (with its comment footer) is itself usable input
    again = run(
        "trajectories", "domain.pddl", "--problem", "big.pddl",
        "--plan", "big.plan", cwd=ws,
    )
    assert again.returncode == EXIT_OK, again.stderr


def test_plan_rejects_foreign_graph(ws, graph_json):
    data = json.loads(graph_json.read_text())
    data["provenance"]["domain_fingerprint"] = "0" * 64
    (ws / "foreign.json").write_text(json.dumps(data))
    result = run("plan", "domain.pddl", "big.pddl", "foreign.json", cwd=ws)
    assert result.returncode == EXIT_ERROR
    assert "different domain" in result.stderr


def test_export_dot(ws, graph_json):
    result = run("export-dot", graph_json.name, cwd=ws)
    assert result.returncode == EXIT_OK
    assert result.stdout.startswith("digraph")


def test_validate_graph_reports_each_trajectory(ws, training_json, graph_json):
    result = run("validate", "graph", graph_json.name, training_json.name, cwd=ws)
    assert result.returncode == EXIT_OK, result.stderr
    for name in ("t01", "t02", "t03", "t04", "t05"):
        assert f"{name}: ok" in result.stdout


def test_exit_code_unsolvable(ws):
    result = run("solve", "domain.pddl", "unsolvable.pddl", cwd=ws)
    assert result.returncode == EXIT_UNSOLVABLE
    stats = json.loads(result.stderr.strip().splitlines()[-1])
    assert stats["status"] == "unsolvable"


def test_exit_code_resource_limit(ws):
    result = run(
        "solve", "domain.pddl", "t05.pddl", "--max-expansions", "1", cwd=ws
    )
    assert result.returncode == EXIT_RESOURCE
    stats = json.loads(result.stderr.strip().splitlines()[-1])
    assert stats["status"] == "resource-limit"


def test_exit_code_usage_errors(ws):
    assert run("solve", "domain.pddl", "missing.pddl", cwd=ws).returncode == EXIT_ERROR
    assert (
        run("solve", "domain.pddl", "t01.pddl", "--helper", "oracle", cwd=ws).returncode
        == EXIT_ERROR
    )


def test_bench_csv_schema_and_error_rows(ws, graph_json):
    (ws / "broken.pddl").write_text(
        "(define (problem broken) (:domain delivery)"
        " (:objects x - nosuchtype) (:init) (:goal (and)))"
    )
    manifest = {
        "domain": "domain.pddl",
        "instances": ["t02.pddl", "unsolvable.pddl", "broken.pddl"],
        "configs": [
            {"name": "hadd", "helper": "hadd"},
            {"name": "lmg", "helper": "hadd", "graph": graph_json.name, "prune": True},
        ],
        "max_expansions": 2000,
    }
    (ws / "manifest.json").write_text(json.dumps(manifest))
    result = run("bench", "manifest.json", "--jobs", "2", "--out", "bench.csv", cwd=ws)
    assert result.returncode == EXIT_OK, result.stderr
    lines = (ws / "bench.csv").read_text().splitlines()
    assert lines[0] == "instance,heuristic,expanded,plan_length,time,status"
    assert len(lines) == 1 + 3 * 2
    rows = [line.split(",") for line in lines[1:]]
    by_key = {(r[0], r[1]): r[5] for r in rows}
    assert by_key[("t02", "hadd")] == "solved"
    assert by_key[("t02", "lmg")] == "solved"
    assert by_key[("unsolvable", "hadd")] == "unsolvable"
    assert by_key[("broken", "hadd")] == "error"
    assert "summary: hadd solved 1/3" in result.stderr
    assert "summary: lmg solved 1/3" in result.stderr
    assert "nosuchtype" in result.stderr  # error detail surfaced


def test_bench_rejects_bad_manifest(ws):
    (ws / "bad.json").write_text("{not json")
    assert run("bench", "bad.json", cwd=ws).returncode == EXIT_ERROR
    (ws / "incomplete.json").write_text('{"domain": "domain.pddl"}')
    assert run("bench", "incomplete.json", cwd=ws).returncode == EXIT_ERROR
