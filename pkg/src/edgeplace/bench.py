"""Benchmark harness: train the agent, evaluate all candidates, emit files.

Reproducibility rules honored here:
  * every random draw comes from a named sub-stream of the one user seed;
  * evaluation snapshots are generated once and shared by all candidates;
  * emitted CSV/JSON contain no wall-clock values unless timing is enabled,
    so fixed-seed runs are byte-identical;
  * every result row is re-checked by the independent verifier before it is
    written; a row that fails verification is a bug, not a warning.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, verify
from .env import PlacementEnv, build_state_scale, run_episode, state_dim
from .model import Scenario
from .nn import MLP, Adam
from .ppo import PolicyAgent, PPOConfig, Trajectory, ppo_update, save_policy
from .util import dump_json, rng_stream
from .workload import WorkloadGenConfig, generate_workloads

RESULT_COLUMNS = (
    "candidate",
    "alpha",
    "snapshot",
    "delay_ms_per_req",
    "total_delay",
    "cost",
    "decision_time_ms",
    "valid",
)
CANDIDATES = ("agent", "joint-milp", "vsvbp", "cr-eua")
THREADS_ENV_VAR = "EDGEPLACE_THREADS"


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: Scenario
    workload_cfg: WorkloadGenConfig
    alphas: tuple[float, ...] = (0.0, 0.5)
    seeds: tuple[int, ...] = (1,)
    candidates: tuple[str, ...] = CANDIDATES
    train_snapshots: int = 50
    eval_snapshots: int = 150
    total_timesteps: int = 20000
    ppo: PPOConfig = field(default_factory=PPOConfig)
    milp_node_budget: int | None = 2000
    warmup: int = 30
    timing: bool = True


@dataclass
class ResultRow:
    candidate: str
    alpha: float
    snapshot: int
    delay_ms_per_req: float
    total_delay: float
    cost: float
    decision_time_ms: float | None
    valid: bool
    decision_doc: dict | None = None  # verified then dropped before CSV


@dataclass
class TrainResult:
    agent: PolicyAgent
    seed: int
    alpha: float
    log_rows: list[dict]
    bounds_dict: dict


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


def train_agent(
    scenario: Scenario,
    alpha: float,
    seed: int,
    workload_cfg: WorkloadGenConfig,
    ppo_cfg: PPOConfig,
    total_timesteps: int,
) -> TrainResult:
    """PPO training over generated snapshots; fully determined by the seed."""
    cfg = replace(workload_cfg) if workload_cfg.n_snapshots > 0 else workload_cfg
    snapshots = generate_workloads(
        scenario.n_functions, scenario.n_nodes, cfg, rng_stream(seed, "workload-train")
    )
    scale = build_state_scale(scenario, snapshots)
    net = MLP(
        state_dim(scenario.n_nodes),
        scenario.n_nodes,
        hidden=ppo_cfg.hidden,
        rng=rng_stream(seed, "policy-init"),
    )
    agent = PolicyAgent(net=net, state_scale=scale)
    optimizer = Adam(lr=ppo_cfg.learning_rate)
    env = PlacementEnv(scenario, alpha)
    sample_rng = rng_stream(seed, "action-sample")
    shuffle_rng = rng_stream(seed, "minibatch-shuffle")

    log_rows: list[dict] = []
    timesteps = 0
    episodes = 0
    cumulative_invalid = 0
    cumulative_valid = 0
    iteration = 0
    while timesteps < total_timesteps:
        trajectory = Trajectory()
        window_invalid = 0
        window_episodes = 0
        while len(trajectory) < ppo_cfg.update_interval:
            snapshot = snapshots[episodes % len(snapshots)]
            record = run_episode(agent, env, snapshot, rng=sample_rng, trajectory=trajectory)
            episodes += 1
            window_episodes += 1
            window_invalid += record.invalid_steps
            cumulative_invalid += record.invalid_steps
            cumulative_valid += len(record.rewards) - record.invalid_steps
        timesteps += len(trajectory)
        diag = ppo_update(net, trajectory, ppo_cfg, optimizer, shuffle_rng)
        iteration += 1
        log_rows.append(
            {
                "iteration": iteration,
                "timesteps": timesteps,
                "episodes": episodes,
                "window_steps": len(trajectory),
                "window_invalid": window_invalid,
                "window_episodes": window_episodes,
                "cumulative_invalid": cumulative_invalid,
                "cumulative_valid": cumulative_valid,
                "mean_reward": diag["mean_reward"],
                "policy_loss": diag["policy_loss"],
                "value_loss": diag["value_loss"],
                "entropy": diag["entropy"],
                "clip_fraction": diag["clip_fraction"],
            }
        )
    return TrainResult(
        agent=agent,
        seed=seed,
        alpha=alpha,
        log_rows=log_rows,
        bounds_dict=env.bounds.to_dict(),
    )


def write_train_log(path: str, rows: list[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in cols])


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def _decision_doc_from_parts(
    scenario, workload, placements, routes, delay, cost, candidate, alpha, snapshot
) -> dict:
    return verify.decision_to_dict(
        scenario_name=scenario.name,
        workload=workload,
        placements=placements,
        routes=routes,
        total_delay=delay,
        total_cost=cost,
        candidate=candidate,
        alpha=alpha,
        snapshot=snapshot,
    )


def _eval_one(
    scenario: Scenario,
    candidate: str,
    alpha: float,
    snapshot_idx: int,
    workload: np.ndarray,
    agent: PolicyAgent | None,
    milp_budget: int | None,
) -> ResultRow:
    total_rate = float(workload.sum())
    started = time.perf_counter()
    if candidate == "agent":
        if agent is None:
            raise ValueError("agent candidate requested but no policy supplied")
        env = PlacementEnv(scenario, alpha)
        record = run_episode(agent, env, workload, deterministic=True)
        decision_s = record.decision_seconds
        valid = record.valid
        delay, cost = record.total_delay, record.total_cost
        placements = np.zeros((scenario.n_functions, scenario.n_nodes), dtype=bool)
        for f, p in record.placements.items():
            placements[f] = p
        routes = record.routes
    else:
        if candidate == "joint-milp":
            sol = baselines.solve_joint_milp(
                scenario, workload, alpha=alpha, node_budget=milp_budget, tie_exact=False
            )
        elif candidate == "vsvbp":
            sol = baselines.solve_vsvbp(scenario, workload)
        elif candidate == "cr-eua":
            sol = baselines.solve_creua(scenario, workload)
        else:
            raise ValueError(f"unknown candidate {candidate!r}")
        decision_s = time.perf_counter() - started
        valid = sol.feasible
        delay = sol.total_delay if valid else float("nan")
        cost = sol.total_cost if valid else float("nan")
        placements = sol.placements
        routes = sol.routes
    doc = None
    if valid:
        doc = _decision_doc_from_parts(
            scenario, workload, placements, routes, delay, cost, candidate, alpha, snapshot_idx
        )
        problems = verify.verify_decision(scenario, doc)
        if problems:  # emitting an unverifiable row would poison the benchmark
            raise AssertionError(
                f"{candidate} produced an invalid decision on snapshot {snapshot_idx}: "
                + "; ".join(problems)
            )
    return ResultRow(
        candidate=candidate,
        alpha=alpha,
        snapshot=snapshot_idx,
        delay_ms_per_req=(delay / total_rate) if valid and total_rate > 0 else float("nan"),
        total_delay=delay,
        cost=cost,
        decision_time_ms=decision_s * 1000.0,
        valid=valid,
        decision_doc=doc,
    )


def evaluate_candidates(
    plan: ExperimentPlan,
    seed: int,
    agents: dict[float, PolicyAgent],
    snapshots: list[np.ndarray] | None = None,
) -> list[ResultRow]:
    """All (candidate, alpha, snapshot) rows; snapshots shared across candidates."""
    scenario = plan.scenario
    if snapshots is None:
        cfg = replace(plan.workload_cfg, n_snapshots=plan.eval_snapshots)
        snapshots = generate_workloads(
            scenario.n_functions, scenario.n_nodes, cfg, rng_stream(seed, "workload-eval")
        )
    threads = 1
    if not plan.timing:  # timing runs stay sequential so measurements don't skew
        threads = max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))
    rows: list[ResultRow] = []
    for candidate in plan.candidates:
        for alpha in plan.alphas:
            agent = agents.get(alpha)
            if plan.timing and plan.warmup > 0:
                # plan.warmup counts per-function placement decisions; one
                # snapshot run makes n_functions of them
                repeats = -(-plan.warmup // max(1, scenario.n_functions))
                for _ in range(repeats):  # warm caches and allocator
                    _eval_one(
                        scenario, candidate, alpha, -1, snapshots[0], agent, plan.milp_node_budget
                    )
            def work(item):
                idx, snap = item
                return _eval_one(
                    scenario, candidate, alpha, idx, snap, agent, plan.milp_node_budget
                )

            items = list(enumerate(snapshots))
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    rows.extend(pool.map(work, items))
            else:
                rows.extend(map(work, items))
    return rows


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(path: str, rows: list[ResultRow], timing: bool) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.candidate,
                    _fmt(row.alpha),
                    row.snapshot,
                    _fmt(row.delay_ms_per_req),
                    _fmt(row.total_delay),
                    _fmt(row.cost),
                    _fmt(row.decision_time_ms if timing else None),
                    _fmt(row.valid),
                ]
            )


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Per (candidate, alpha): means over valid snapshots plus validity rate."""
    keys = sorted({(r.candidate, r.alpha) for r in rows})
    out = []
    for candidate, alpha in keys:
        group = [r for r in rows if r.candidate == candidate and r.alpha == alpha]
        valid = [r for r in group if r.valid]
        out.append(
            {
                "candidate": candidate,
                "alpha": alpha,
                "snapshots": len(group),
                "valid_fraction": len(valid) / len(group) if group else 0.0,
                "mean_delay_ms_per_req": (
                    float(np.mean([r.delay_ms_per_req for r in valid])) if valid else None
                ),
                "mean_total_delay": (
                    float(np.mean([r.total_delay for r in valid])) if valid else None
                ),
                "mean_cost": float(np.mean([r.cost for r in valid])) if valid else None,
                "mean_decision_time_ms": (
                    float(np.mean([r.decision_time_ms for r in valid])) if valid else None
                ),
            }
        )
    return out


def emit_results(
    out_dir: str, rows: list[ResultRow], plan: ExperimentPlan, seed: int
) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    write_results_csv(results_path, rows, timing=plan.timing)
    summary = summarize(rows)
    if not plan.timing:
        for entry in summary:
            entry["mean_decision_time_ms"] = None
    summary_path = os.path.join(out_dir, "summary.json")
    dump_json(summary_path, summary)
    meta_path = os.path.join(out_dir, "metadata.json")
    dump_json(
        meta_path,
        {
            "seed": seed,
            "scenario": plan.scenario.name,
            "alphas": list(plan.alphas),
            "candidates": list(plan.candidates),
            "eval_snapshots": plan.eval_snapshots,
            "train_snapshots": plan.train_snapshots,
            "total_timesteps": plan.total_timesteps,
            "milp_node_budget": plan.milp_node_budget,
            "timing": plan.timing,
            "ppo": plan.ppo.to_dict(),
        },
    )
    return {"results": results_path, "summary": summary_path, "metadata": meta_path}


def render_summary_table(summary: list[dict], timing: bool) -> str:
    headers = ["candidate", "alpha", "valid%", "delay ms/req", "cost", "decision ms"]
    rows = []
    for entry in summary:
        rows.append(
            [
                entry["candidate"],
                f"{entry['alpha']:g}",
                f"{100.0 * entry['valid_fraction']:.1f}",
                _num(entry["mean_delay_ms_per_req"]),
                _num(entry["mean_cost"]),
                _num(entry["mean_decision_time_ms"]) if timing else "-",
            ]
        )
    widths = [max(len(h), *(len(r[c]) for r in rows)) for c, h in enumerate(headers)]
    buf = io.StringIO()
    buf.write("  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)).rstrip() + "\n")
    for r in rows:
        buf.write("  ".join(r[c].ljust(widths[c]) for c in range(len(headers))).rstrip() + "\n")
    return buf.getvalue()


def _num(value) -> str:
    return "-" if value is None else f"{value:.4f}"


# --------------------------------------------------------------------------
# full pipeline
# --------------------------------------------------------------------------


def run_compare(plan: ExperimentPlan, seed: int, out_dir: str) -> dict:
    """Train agents for every alpha, evaluate all candidates, emit artifacts."""
    os.makedirs(out_dir, exist_ok=True)
    agents: dict[float, PolicyAgent] = {}
    for alpha in plan.alphas:
        cfg = replace(plan.workload_cfg, n_snapshots=plan.train_snapshots)
        result = train_agent(
            plan.scenario, alpha, seed, cfg, plan.ppo, plan.total_timesteps
        )
        agents[alpha] = result.agent
        tag = f"alpha{alpha:g}-seed{seed}"
        write_train_log(os.path.join(out_dir, f"train-log-{tag}.csv"), result.log_rows)
        save_policy(
            os.path.join(out_dir, f"policy-{tag}.json"),
            result.agent,
            extras={"alpha": alpha, "seed": seed, "reward_bounds": result.bounds_dict},
        )
    rows = evaluate_candidates(plan, seed, agents)
    paths = emit_results(out_dir, rows, plan, seed)
    summary = summarize(rows)
    return {"paths": paths, "summary": summary, "rows": rows}
