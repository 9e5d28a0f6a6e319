"""Sequential placement environment.

One episode places every function of a workload snapshot, most demanding
first. The observation concatenates the flattened delay matrix, interleaved
per-node residual (cores, memory), the current function's workload row,
memory statistics of the functions still queued, and the cumulative delay.

Rewards: each valid step re-normalizes the cumulative delay and cumulative
core cost into [-1, 1] against run-level bounds and returns their negated
alpha-blend, so 0-cost/0-delay scores +1 and worst-case scores -1. Invalid
steps (no node chosen, memory or core overdraft, unroutable traffic) score
a flat penalty below that range and commit nothing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .model import DeploymentState, Scenario, initial_deployment
from .ppo import PolicyAgent, Trajectory, deterministic_action, forward, sample_action
from .routing import RoutingProblem, solve_routing

PENALTY_REWARD = -2.0
_CORE_TOL = 1e-9


# --------------------------------------------------------------------------
# state construction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvState:
    delays_flat: np.ndarray  # N*N
    node_resources: np.ndarray  # 2N, interleaved (cores_i, memory_i)
    workload_row: np.ndarray  # N, current function
    queue_memory: np.ndarray  # 3, (current mem, mean, std of remaining)
    cumulative_delay: float

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.delays_flat,
                self.node_resources,
                self.workload_row,
                self.queue_memory,
                [self.cumulative_delay],
            ]
        )


def state_dim(n_nodes: int) -> int:
    return n_nodes * n_nodes + 3 * n_nodes + 4


def make_queue(scenario: Scenario, workload: np.ndarray | None = None) -> list[int]:
    """Placement order: heaviest total workload first, then larger memory,
    then smaller id."""
    w = scenario.workload if workload is None else workload
    totals = w.sum(axis=1)
    mem = scenario.function_memory()
    return sorted(
        range(scenario.n_functions), key=lambda f: (-totals[f], -mem[f], f)
    )


def build_state(
    scenario: Scenario,
    deployment: DeploymentState,
    workload: np.ndarray,
    queue: list[int],
) -> EnvState:
    n = scenario.n_nodes
    current = queue[0]
    resources = np.empty(2 * n)
    resources[0::2] = deployment.available_cores
    resources[1::2] = deployment.available_memory
    mem = scenario.function_memory()
    rest = np.array([mem[f] for f in queue[1:]])
    if rest.size:
        queue_memory = np.array([mem[current], rest.mean(), rest.std()])
    else:
        queue_memory = np.array([mem[current], 0.0, 0.0])
    return EnvState(
        delays_flat=scenario.topology.delays.ravel().copy(),
        node_resources=resources,
        workload_row=workload[current].copy(),
        queue_memory=queue_memory,
        cumulative_delay=deployment.total_delay,
    )


def build_state_scale(scenario: Scenario, snapshots: list[np.ndarray]) -> np.ndarray:
    """Fixed positive per-component scale so state entries land near [0, 1]."""
    n = scenario.n_nodes
    d = scenario.topology.delays
    rate_max = max((float(s.max()) for s in snapshots if s.size), default=1.0)
    mem_fn_max = float(scenario.function_memory().max())
    t_max = max((t_max_bound(scenario, s) for s in snapshots), default=1.0)
    scale = np.empty(state_dim(n))
    scale[: n * n] = max(float(d.max()), 1.0)
    res = np.empty(2 * n)
    res[0::2] = scenario.topology.cores
    res[1::2] = scenario.topology.memory
    scale[n * n : n * n + 2 * n] = np.maximum(res, 1.0)
    scale[n * n + 2 * n : n * n + 3 * n] = max(rate_max, 1.0)
    scale[n * n + 3 * n : n * n + 3 * n + 3] = max(mem_fn_max, 1.0)
    scale[-1] = max(t_max, 1.0)
    return scale


# --------------------------------------------------------------------------
# reward normalization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RewardBounds:
    """Normalization window for cumulative delay and cumulative core cost.

    Bounds only ever widen (within and across episodes of a run) so the
    reward scale cannot oscillate while training.
    """

    t_min: float = 0.0
    t_max: float = 0.0
    c_min: float = 0.0
    c_max: float = 0.0

    def widened(self, t_upper: float, c_upper: float) -> "RewardBounds":
        return replace(self, t_max=max(self.t_max, t_upper), c_max=max(self.c_max, c_upper))

    def observe(self, t: float, c: float) -> "RewardBounds":
        return RewardBounds(
            t_min=min(self.t_min, t),
            t_max=max(self.t_max, t),
            c_min=min(self.c_min, c),
            c_max=max(self.c_max, c),
        )

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "c_min": self.c_min, "c_max": self.c_max}

    @classmethod
    def from_dict(cls, doc: dict) -> "RewardBounds":
        return cls(
            t_min=float(doc["t_min"]),
            t_max=float(doc["t_max"]),
            c_min=float(doc["c_min"]),
            c_max=float(doc["c_max"]),
        )


def _normalize(value: float, lo: float, hi: float) -> float:
    if hi - lo <= 1e-12:
        return -1.0  # degenerate window: best possible by convention
    return 2.0 * (value - lo) / (hi - lo) - 1.0


def normalize_and_reward(
    t_total: float, c_total: float, bounds: RewardBounds, alpha: float
) -> tuple[float, RewardBounds]:
    """Blend normalized cumulative delay and cost into a reward in [-1, 1]."""
    bounds = bounds.observe(t_total, c_total)
    t_norm = _normalize(t_total, bounds.t_min, bounds.t_max)
    c_norm = _normalize(c_total, bounds.c_min, bounds.c_max)
    reward = -(alpha * c_norm + (1.0 - alpha) * t_norm)
    return reward, bounds


def t_max_bound(scenario: Scenario, workload: np.ndarray) -> float:
    """Upper bound on cumulative delay: every request crossing every link."""
    return float(np.sum(workload * scenario.topology.delays.sum(axis=1)[None, :]))


def cost_increment(routing: np.ndarray, workload_row: np.ndarray, cpr: np.ndarray) -> float:
    """Core-units consumed by one function's routed traffic."""
    return float(np.sum(routing * workload_row[:, None] * cpr[None, :]))


# --------------------------------------------------------------------------
# environment
# --------------------------------------------------------------------------


@dataclass
class StepOutcome:
    function_id: int
    reward: float
    done: bool
    valid: bool
    violation: str | None
    delay_increment: float
    cost_increment: float
    routing_seconds: float
    state: EnvState | None  # next observation, None when done


class PlacementEnv:
    def __init__(self, scenario: Scenario, alpha: float, bounds: RewardBounds | None = None):
        self.scenario = scenario
        self.alpha = float(alpha)
        self.bounds = bounds if bounds is not None else RewardBounds(
            c_max=float(scenario.topology.cores.sum())
        )
        self.workload = scenario.workload
        self.deployment = initial_deployment(scenario.topology)
        self.queue: list[int] = []
        self.invalid_steps = 0

    def reset(self, workload: np.ndarray | None = None) -> EnvState:
        if workload is not None:
            self.workload = workload
        self.bounds = self.bounds.widened(
            t_upper=t_max_bound(self.scenario, self.workload),
            c_upper=float(self.scenario.topology.cores.sum()),
        )
        self.deployment = initial_deployment(self.scenario.topology)
        self.queue = make_queue(self.scenario, self.workload)
        self.invalid_steps = 0
        return build_state(self.scenario, self.deployment, self.workload, self.queue)

    def step(self, action: np.ndarray) -> StepOutcome:
        if not self.queue:
            raise RuntimeError("step() after episode end; call reset()")
        fid = self.queue.pop(0)
        fn = self.scenario.functions[fid]
        placement = np.asarray(action, dtype=bool)
        n = self.scenario.n_nodes
        violation = None
        routing = None
        delay_inc = 0.0
        cost_inc = 0.0
        routing_seconds = 0.0

        if not placement.any():
            violation = "empty-placement"
        else:
            mem_after = self.deployment.available_memory - np.where(placement, fn.memory, 0.0)
            if np.any(mem_after < -_CORE_TOL):
                violation = "memory"
        if violation is None:
            cpr = fn.cores_per_request_vec(n)
            problem = RoutingProblem(
                delays=self.scenario.topology.delays,
                workload_row=self.workload[fid],
                placement=placement,
                available_cores=self.deployment.available_cores,
                cores_per_request=cpr,
            )
            start = time.perf_counter()
            solution = solve_routing(problem)
            routing_seconds = time.perf_counter() - start
            if not solution.feasible:
                violation = "routing-infeasible"
            else:
                routing = solution.routing
                delay_inc = solution.objective_delay
                cost_inc = cost_increment(routing, self.workload[fid], cpr)
                draw = routing.T @ self.workload[fid] * cpr
                if np.any(self.deployment.available_cores - draw < -_CORE_TOL):
                    violation = "cores"

        if violation is None:
            self.deployment = self.deployment.commit(
                fn, placement, routing, self.workload[fid], delay_inc, cost_inc
            )
            reward, self.bounds = normalize_and_reward(
                self.deployment.total_delay, self.deployment.total_cost, self.bounds, self.alpha
            )
            valid = True
        else:
            self.invalid_steps += 1
            reward = PENALTY_REWARD
            valid = False
            delay_inc = 0.0
            cost_inc = 0.0

        done = not self.queue
        state = (
            None
            if done
            else build_state(self.scenario, self.deployment, self.workload, self.queue)
        )
        return StepOutcome(
            function_id=fid,
            reward=reward,
            done=done,
            valid=valid,
            violation=violation,
            delay_increment=delay_inc,
            cost_increment=cost_inc,
            routing_seconds=routing_seconds,
            state=state,
        )


# --------------------------------------------------------------------------
# episode runner
# --------------------------------------------------------------------------


@dataclass
class EpisodeRecord:
    total_delay: float
    total_cost: float
    rewards: list[float]
    invalid_steps: int
    violations: list[str]
    placements: dict[int, np.ndarray]
    routes: dict[int, np.ndarray]
    decision_seconds: float  # policy forward + routing solve only
    valid: bool


def run_episode(
    agent: PolicyAgent,
    env: PlacementEnv,
    workload: np.ndarray,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
    trajectory: Trajectory | None = None,
) -> EpisodeRecord:
    """Roll one snapshot through the policy; optionally record transitions."""
    state = env.reset(workload)
    rewards: list[float] = []
    violations: list[str] = []
    decision_seconds = 0.0
    done = False
    while not done:
        # the trajectory must hold exactly what the net consumed, so scale here
        net_input = state.vector / agent.state_scale
        start = time.perf_counter()
        probs, value = forward(agent.net, net_input)
        if deterministic:
            action = deterministic_action(probs)
            log_prob = 0.0
        else:
            action, log_prob = sample_action(probs, rng)
        decision_seconds += time.perf_counter() - start
        outcome = env.step(action)
        decision_seconds += outcome.routing_seconds
        rewards.append(outcome.reward)
        if outcome.violation:
            violations.append(f"{outcome.function_id}:{outcome.violation}")
        if trajectory is not None:
            trajectory.add(net_input, action, log_prob, value, outcome.reward, outcome.done)
        done = outcome.done
        state = outcome.state
    if trajectory is not None:
        trajectory.last_value = 0.0  # episodes always end at the queue tail
    return EpisodeRecord(
        total_delay=env.deployment.total_delay,
        total_cost=env.deployment.total_cost,
        rewards=rewards,
        invalid_steps=env.invalid_steps,
        violations=violations,
        placements=dict(env.deployment.placements),
        routes=dict(env.deployment.routes),
        decision_seconds=decision_seconds,
        valid=env.invalid_steps == 0,
    )
