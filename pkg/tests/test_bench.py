from __future__ import annotations

import csv
import json
import os

import numpy as np
import pytest

from edgeplace.bench import (
    CANDIDATES,
    RESULT_COLUMNS,
    THREADS_ENV_VAR,
    ExperimentPlan,
    emit_results,
    evaluate_candidates,
    render_summary_table,
    summarize,
    train_agent,
    write_results_csv,
    write_train_log,
)
from edgeplace.ppo import PPOConfig
from edgeplace.workload import WorkloadGenConfig

_FAST_PPO = PPOConfig(update_interval=64, minibatch_size=32, epochs=2, hidden=(16,))


@pytest.fixture
def small_plan(tri_scenario):
    return ExperimentPlan(
        scenario=tri_scenario,
        workload_cfg=WorkloadGenConfig(n_snapshots=4, rate_range=(4, 12)),
        alphas=(0.0,),
        eval_snapshots=4,
        train_snapshots=4,
        total_timesteps=128,
        ppo=_FAST_PPO,
        milp_node_budget=200,
        warmup=2,
        timing=True,
    )


def _train(tri_scenario, seed=1):
    return train_agent(
        tri_scenario, 0.0, seed,
        WorkloadGenConfig(n_snapshots=4, rate_range=(4, 12)),
        _FAST_PPO, total_timesteps=128,
    )


def test_train_log_rows_are_consistent(tri_scenario):
    result = _train(tri_scenario)
    assert len(result.log_rows) == 2  # 128 timesteps at 64 per update
    for row in result.log_rows:
        assert row["cumulative_invalid"] + row["cumulative_valid"] == row["timesteps"]
        assert row["window_steps"] >= _FAST_PPO.update_interval
        assert np.isfinite(row["mean_reward"])
    assert result.log_rows[-1]["timesteps"] >= 128
    assert set(result.bounds_dict) == {"t_min", "t_max", "c_min", "c_max"}


def test_training_is_seed_deterministic(tri_scenario):
    a = _train(tri_scenario, seed=7).agent
    b = _train(tri_scenario, seed=7).agent
    c = _train(tri_scenario, seed=8).agent
    np.testing.assert_array_equal(a.net.get_params(), b.net.get_params())
    assert not np.array_equal(a.net.get_params(), c.net.get_params())


def test_write_train_log_round_trips(tri_scenario, tmp_path):
    result = _train(tri_scenario)
    path = tmp_path / "log.csv"
    write_train_log(str(path), result.log_rows)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(result.log_rows)
    assert float(rows[0]["mean_reward"]) == result.log_rows[0]["mean_reward"]
    assert int(rows[-1]["timesteps"]) == result.log_rows[-1]["timesteps"]


def test_evaluate_produces_verified_grid(small_plan, tri_scenario):
    from edgeplace.util import rng_stream
    from edgeplace.workload import generate_workloads
    from dataclasses import replace

    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    assert len(rows) == len(CANDIDATES) * small_plan.eval_snapshots
    for candidate in CANDIDATES:
        snaps = [r.snapshot for r in rows if r.candidate == candidate]
        assert snaps == list(range(small_plan.eval_snapshots))  # warmup rows excluded
    cfg = replace(small_plan.workload_cfg, n_snapshots=small_plan.eval_snapshots)
    snapshots = generate_workloads(2, 3, cfg, rng_stream(3, "workload-eval"))
    for row in rows:
        assert row.valid  # plenty of capacity in this scenario
        assert row.decision_time_ms is not None and row.decision_time_ms >= 0.0
        assert row.delay_ms_per_req == pytest.approx(
            row.total_delay / snapshots[row.snapshot].sum()
        )


def test_snapshots_shared_across_candidates(small_plan, tri_scenario):
    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    milp = {r.snapshot: r for r in rows if r.candidate == "joint-milp"}
    vsvbp = {r.snapshot: r for r in rows if r.candidate == "vsvbp"}
    # same snapshot index refers to the same workload: the optimal delay can
    # never exceed the greedy one under alpha=0
    for s, milp_row in milp.items():
        assert milp_row.total_delay <= vsvbp[s].total_delay + 1e-9


def test_results_csv_format(small_plan, tri_scenario, tmp_path):
    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    path = tmp_path / "results.csv"
    write_results_csv(str(path), rows, timing=True)
    with open(path, newline="") as fh:
        parsed = list(csv.reader(fh))
    assert tuple(parsed[0]) == RESULT_COLUMNS
    assert len(parsed) == 1 + len(rows)
    first = parsed[1]
    assert first[0] == rows[0].candidate
    assert float(first[3]) == rows[0].delay_ms_per_req  # repr round-trips exactly
    # timing off blanks the measurement column but keeps the schema
    write_results_csv(str(path), rows, timing=False)
    with open(path, newline="") as fh:
        parsed = list(csv.reader(fh))
    assert all(line[6] == "" for line in parsed[1:])


def test_summarize_matches_hand_means(small_plan, tri_scenario):
    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    summary = summarize(rows)
    entry = next(e for e in summary if e["candidate"] == "joint-milp")
    group = [r for r in rows if r.candidate == "joint-milp"]
    assert entry["snapshots"] == len(group)
    assert entry["valid_fraction"] == 1.0
    assert entry["mean_cost"] == pytest.approx(np.mean([r.cost for r in group]))
    assert entry["mean_total_delay"] == pytest.approx(
        np.mean([r.total_delay for r in group])
    )


def test_emit_results_writes_artifacts(small_plan, tri_scenario, tmp_path):
    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    paths = emit_results(str(tmp_path / "out"), rows, small_plan, seed=3)
    assert os.path.exists(paths["results"])
    with open(paths["summary"]) as fh:
        summary = json.load(fh)
    assert {e["candidate"] for e in summary} == set(CANDIDATES)
    with open(paths["metadata"]) as fh:
        meta = json.load(fh)
    assert meta["seed"] == 3 and meta["alphas"] == [0.0]
    assert meta["ppo"]["update_interval"] == 64


def test_untimed_runs_are_byte_identical(small_plan, tri_scenario, tmp_path):
    plan = ExperimentPlan(
        **{**small_plan.__dict__, "timing": False}
    )
    agent = _train(tri_scenario).agent
    blobs = []
    for attempt in range(2):
        rows = evaluate_candidates(plan, seed=3, agents={0.0: agent})
        out = tmp_path / f"run{attempt}"
        paths = emit_results(str(out), rows, plan, seed=3)
        blob = b"".join(open(paths[k], "rb").read() for k in ("results", "summary", "metadata"))
        blobs.append(blob)
    assert blobs[0] == blobs[1]


def test_thread_env_var_keeps_row_order(small_plan, tri_scenario, monkeypatch):
    plan = ExperimentPlan(**{**small_plan.__dict__, "timing": False})
    agent = _train(tri_scenario).agent
    sequential = evaluate_candidates(plan, seed=3, agents={0.0: agent})
    monkeypatch.setenv(THREADS_ENV_VAR, "4")
    threaded = evaluate_candidates(plan, seed=3, agents={0.0: agent})
    key = lambda r: (r.candidate, r.alpha, r.snapshot, r.total_delay, r.cost, r.valid)
    assert [key(r) for r in sequential] == [key(r) for r in threaded]


def test_render_summary_table_layout(small_plan, tri_scenario):
    agent = _train(tri_scenario).agent
    rows = evaluate_candidates(small_plan, seed=3, agents={0.0: agent})
    text = render_summary_table(summarize(rows), timing=True)
    lines = text.splitlines()
    assert lines[0].startswith("candidate")
    assert len(lines) == 1 + len(CANDIDATES)
    untimed = render_summary_table(summarize(rows), timing=False)
    assert untimed.splitlines()[1].rstrip().endswith("-")
