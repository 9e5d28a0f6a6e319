"""Command-line front end.

Batch-style subcommands over the library: generate scenarios and workload
traces, train the placement agent, evaluate candidates, run the full
comparison, and verify emitted decision files.

Exit codes: 0 success, 1 usage error, 2 validation/verification failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import bench
from .env import state_dim
from .model import ScenarioError, load_scenario, save_scenario
from .nn import PolicyArchitectureError
from .ppo import PPOConfig, load_policy, save_policy
from .scenarios import PRESETS, build_preset, preset_workload_config, random_scenario
from .util import rng_stream
from .verify import verify_file
from .workload import WorkloadError, WorkloadGenConfig, generate_workloads, ingest_trace, write_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(ValueError):
    pass


def _add_common(sub: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    sub.add_argument("--scenario", required=scenario_required, help="scenario JSON path")
    sub.add_argument("--alpha", type=float, default=0.0, help="cost weight in [0, 1]")
    sub.add_argument("--seed", type=int, default=0, help="root seed for all sub-streams")
    sub.add_argument("--out", default=None, help="output file or directory")
    sub.add_argument("--config", default=None, help="JSON file with config overrides")


def build_parser() -> _Parser:
    parser = _Parser(prog="edgeplace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenario", help="write a preset or randomized scenario")
    _add_common(p, scenario_required=False)
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--nodes", type=int, default=5)
    p.add_argument("--functions", type=int, default=4)

    p = sub.add_parser("gen-workload", help="write workload snapshots as a trace CSV")
    _add_common(p)
    p.add_argument("--snapshots", type=int, default=150)

    p = sub.add_parser("train", help="train the placement agent")
    _add_common(p)
    p.add_argument("--timesteps", type=int, default=20000)
    p.add_argument("--train-snapshots", type=int, default=50)

    p = sub.add_parser("evaluate", help="evaluate candidates on fresh or traced snapshots")
    _add_common(p)
    p.add_argument("--checkpoint", default=None, help="trained policy for the agent candidate")
    p.add_argument("--candidates", default="agent,joint-milp,vsvbp,cr-eua")
    p.add_argument("--snapshots", type=int, default=150)
    p.add_argument("--trace", default=None, help="evaluate on snapshots from this trace CSV")
    p.add_argument("--milp-budget", type=int, default=2000, help="LP solves per MILP call")
    timing = p.add_mutually_exclusive_group()
    timing.add_argument("--timing", dest="timing", action="store_true", default=True)
    timing.add_argument("--no-timing", dest="timing", action="store_false")

    p = sub.add_parser("compare", help="train at each alpha, evaluate everything, print table")
    _add_common(p)
    p.add_argument("--alphas", default="0,0.5", help="comma-separated cost weights")
    p.add_argument("--timesteps", type=int, default=20000)
    p.add_argument("--train-snapshots", type=int, default=50)
    p.add_argument("--snapshots", type=int, default=150)
    p.add_argument("--milp-budget", type=int, default=2000)
    timing = p.add_mutually_exclusive_group()
    timing.add_argument("--timing", dest="timing", action="store_true", default=True)
    timing.add_argument("--no-timing", dest="timing", action="store_false")

    p = sub.add_parser("verify", help="check decision files against a scenario")
    _add_common(p)
    p.add_argument("decisions", nargs="+", help="decision JSON files")

    return parser


# --------------------------------------------------------------------------
# config plumbing
# --------------------------------------------------------------------------


def _load_overrides(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return doc


def _ppo_config(overrides: dict) -> PPOConfig:
    return PPOConfig.from_dict({**PPOConfig().to_dict(), **overrides.get("ppo", {})})


def _workload_config(scenario, n_snapshots: int, overrides: dict) -> WorkloadGenConfig:
    if scenario.name in PRESETS:
        cfg = preset_workload_config(scenario.name, n_snapshots)
    else:
        cfg = WorkloadGenConfig(n_snapshots=n_snapshots)
    patch = overrides.get("workload", {})
    if patch:
        fields = {k: v for k, v in patch.items() if k in WorkloadGenConfig.__dataclass_fields__}
        if "rate_range" in fields:
            fields["rate_range"] = tuple(fields["rate_range"])
        cfg = replace(cfg, **fields)
    return replace(cfg, n_snapshots=n_snapshots)


def _require_out(args, what: str) -> str:
    if not args.out:
        raise UsageError(f"--out is required for {what}")
    return args.out


def _alpha_list(spec: str) -> tuple[float, ...]:
    try:
        alphas = tuple(float(a) for a in spec.split(",") if a.strip() != "")
    except ValueError as exc:
        raise UsageError(f"bad --alphas value {spec!r}") from exc
    if not alphas or any(not 0.0 <= a <= 1.0 for a in alphas):
        raise UsageError("--alphas entries must lie in [0, 1]")
    return alphas


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_gen_scenario(args) -> int:
    out = _require_out(args, "gen-scenario")
    if args.preset:
        scenario = build_preset(args.preset)
    else:
        if args.nodes < 1 or args.functions < 1:
            raise UsageError("--nodes and --functions must be positive")
        scenario = random_scenario(
            args.nodes, args.functions, rng_stream(args.seed, "gen-scenario"), name="random"
        )
    save_scenario(out, scenario)
    print(f"wrote scenario {scenario.name!r} to {out}")
    return EXIT_OK


def cmd_gen_workload(args) -> int:
    out = _require_out(args, "gen-workload")
    scenario = load_scenario(args.scenario)
    overrides = _load_overrides(args.config)
    cfg = _workload_config(scenario, args.snapshots, overrides)
    snapshots = generate_workloads(
        scenario.n_functions, scenario.n_nodes, cfg, rng_stream(args.seed, "workload-eval")
    )
    write_trace(out, snapshots)
    print(f"wrote {len(snapshots)} snapshots to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    out_dir = _require_out(args, "train")
    scenario = load_scenario(args.scenario)
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    overrides = _load_overrides(args.config)
    ppo_cfg = _ppo_config(overrides)
    workload_cfg = _workload_config(scenario, args.train_snapshots, overrides)
    result = bench.train_agent(
        scenario, args.alpha, args.seed, workload_cfg, ppo_cfg, args.timesteps
    )
    os.makedirs(out_dir, exist_ok=True)
    tag = f"alpha{args.alpha:g}-seed{args.seed}"
    log_path = os.path.join(out_dir, f"train-log-{tag}.csv")
    policy_path = os.path.join(out_dir, f"policy-{tag}.json")
    bench.write_train_log(log_path, result.log_rows)
    save_policy(
        policy_path,
        result.agent,
        extras={"alpha": args.alpha, "seed": args.seed, "reward_bounds": result.bounds_dict},
    )
    last = result.log_rows[-1] if result.log_rows else {}
    print(f"trained {last.get('timesteps', 0)} steps over {last.get('episodes', 0)} episodes")
    print(f"wrote {policy_path}")
    print(f"wrote {log_path}")
    return EXIT_OK


def _build_plan(args, scenario, overrides, alphas) -> bench.ExperimentPlan:
    ppo_cfg = _ppo_config(overrides)
    workload_cfg = _workload_config(scenario, args.snapshots, overrides)
    plan = bench.ExperimentPlan(
        scenario=scenario,
        workload_cfg=workload_cfg,
        alphas=alphas,
        seeds=(args.seed,),
        candidates=tuple(
            c.strip() for c in getattr(args, "candidates", ",".join(bench.CANDIDATES)).split(",")
        ),
        train_snapshots=getattr(args, "train_snapshots", 50),
        eval_snapshots=args.snapshots,
        total_timesteps=getattr(args, "timesteps", 20000),
        ppo=ppo_cfg,
        milp_node_budget=args.milp_budget,
        timing=args.timing,
    )
    for candidate in plan.candidates:
        if candidate not in bench.CANDIDATES:
            raise UsageError(f"unknown candidate {candidate!r}; choose from {bench.CANDIDATES}")
    patch = overrides.get("plan", {})
    if patch:
        fields = {
            k: v for k, v in patch.items() if k in bench.ExperimentPlan.__dataclass_fields__
        }
        for key in ("alphas", "seeds", "candidates"):
            if key in fields:
                fields[key] = tuple(fields[key])
        plan = replace(plan, **fields)
    return plan


def cmd_evaluate(args) -> int:
    out_dir = _require_out(args, "evaluate")
    scenario = load_scenario(args.scenario)
    if not 0.0 <= args.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    overrides = _load_overrides(args.config)
    plan = _build_plan(args, scenario, overrides, alphas=(args.alpha,))
    agents = {}
    if "agent" in plan.candidates:
        if not args.checkpoint:
            raise UsageError("--checkpoint is required when evaluating the agent candidate")
        checkpoint = load_policy(
            args.checkpoint,
            expect_input_dim=state_dim(scenario.n_nodes),
            expect_n_actions=scenario.n_nodes,
        )
        agents[args.alpha] = checkpoint.agent
    snapshots = None
    if args.trace:
        snapshots = ingest_trace(args.trace)
        shapes = {s.shape for s in snapshots}
        if shapes != {(scenario.n_functions, scenario.n_nodes)}:
            raise ScenarioError(
                f"trace shapes {shapes} do not match scenario "
                f"({scenario.n_functions}, {scenario.n_nodes})"
            )
        plan = replace(plan, eval_snapshots=len(snapshots))
    rows = bench.evaluate_candidates(plan, args.seed, agents, snapshots=snapshots)
    paths = bench.emit_results(out_dir, rows, plan, args.seed)
    summary = bench.summarize(rows)
    if not plan.timing:
        for entry in summary:
            entry["mean_decision_time_ms"] = None
    print(bench.render_summary_table(summary, timing=plan.timing), end="")
    print(f"wrote {paths['results']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    out_dir = _require_out(args, "compare")
    scenario = load_scenario(args.scenario)
    overrides = _load_overrides(args.config)
    alphas = _alpha_list(args.alphas)
    args.candidates = ",".join(bench.CANDIDATES)
    plan = _build_plan(args, scenario, overrides, alphas=alphas)
    outcome = bench.run_compare(plan, args.seed, out_dir)
    summary = outcome["summary"]
    if not plan.timing:
        for entry in summary:
            entry["mean_decision_time_ms"] = None
    print(bench.render_summary_table(summary, timing=plan.timing), end="")
    print(f"wrote {outcome['paths']['results']}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    failures = 0
    for path in args.decisions:
        problems = verify_file(scenario, path)
        if problems:
            failures += 1
            print(f"FAIL {path}")
            for problem in problems:
                print(f"  {problem}")
        else:
            print(f"OK   {path}")
    if failures:
        print(f"{failures} of {len(args.decisions)} decision files failed verification")
        return EXIT_INVALID
    print(f"all {len(args.decisions)} decision files verified")
    return EXIT_OK


_COMMANDS = {
    "gen-scenario": cmd_gen_scenario,
    "gen-workload": cmd_gen_workload,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"edgeplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, WorkloadError, PolicyArchitectureError) as exc:
        print(f"edgeplace: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - defensive
        print(f"edgeplace: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
