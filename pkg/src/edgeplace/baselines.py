"""Non-learning placement baselines.

solve_joint_milp: exact joint placement+routing via branch and bound on the
binary placement variables with LP relaxation bounds (routing is a linear
program once placements are fixed, so leaves are solved exactly). Branching
is function-major / node-index ascending with the 1-branch explored first,
which makes the search order, the incumbent, and therefore the output fully
deterministic. Budgets are counted in LP solves, not wall time, so budgeted
runs are reproducible too.

solve_vsvbp: bin-packing-flavored greedy, fewest hosting nodes first.
solve_creua: criticality-ordered greedy, nearest node first per source.
Both are deliberately simple reference points, not faithful reimplementations
of any specific system.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .env import cost_increment, make_queue, t_max_bound
from .model import Scenario, initial_deployment
from .routing import RoutingProblem, solve_routing, total_delay

_TIE_TOL = 1e-12


@dataclass
class JointSolution:
    status: str  # "optimal" | "feasible" | "infeasible" | "budget-exhausted"
    placements: np.ndarray | None  # (F, N) bool
    routes: dict[int, np.ndarray] | None
    total_delay: float | None
    total_cost: float | None
    objective: float | None
    optimal: bool
    lp_solves: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.placements is not None


def joint_objective_weights(scenario: Scenario, workload: np.ndarray, alpha: float):
    """Delay/cost weights equivalent to the reward's normalized alpha-blend."""
    t_span = max(t_max_bound(scenario, workload), 1e-12)
    c_span = max(float(scenario.topology.cores.sum()), 1e-12)
    return 2.0 * (1.0 - alpha) / t_span, 2.0 * alpha / c_span


# --------------------------------------------------------------------------
# joint routing LP over a placement-allowance mask
# --------------------------------------------------------------------------


def _joint_routing_lp(
    scenario: Scenario,
    workload: np.ndarray,
    allowed: np.ndarray,
    lam_t: float,
    lam_c: float,
):
    """Min-cost routing of all functions at once under shared core capacity.

    allowed[f, j] marks nodes function f may run on. Returns (objective,
    delay, cost, x (F, N, N)) or None when no feasible routing exists.
    Memory is a placement property, not enforced here.
    """
    f_cnt, n = workload.shape
    delays = scenario.topology.delays
    cpr = scenario.cores_per_request_matrix()
    var_index: list[tuple[int, int, int]] = []
    for f in range(f_cnt):
        hosts = np.flatnonzero(allowed[f])
        if hosts.size == 0:
            return None
        for i in np.flatnonzero(workload[f] > 0):
            for j in hosts:
                var_index.append((f, int(i), int(j)))
    if not var_index:
        # no traffic at all: park every function on its lowest allowed node
        x = np.zeros((f_cnt, n, n))
        for f in range(f_cnt):
            x[f, :, int(np.flatnonzero(allowed[f])[0])] = 1.0
        return 0.0, 0.0, 0.0, x
    nvar = len(var_index)
    cost_vec = np.array(
        [
            lam_t * workload[f, i] * delays[i, j] + lam_c * workload[f, i] * cpr[f, j]
            for f, i, j in var_index
        ]
    )
    rows = {}
    for idx, (f, i, _) in enumerate(var_index):
        rows.setdefault((f, i), []).append(idx)
    a_eq = np.zeros((len(rows), nvar))
    for r, idxs in enumerate(rows.values()):
        a_eq[r, idxs] = 1.0
    b_eq = np.ones(len(rows))
    a_ub = np.zeros((n, nvar))
    for idx, (f, i, j) in enumerate(var_index):
        a_ub[j, idx] = workload[f, i] * cpr[f, j]
    b_ub = scenario.topology.cores
    res = linprog(
        cost_vec,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        return None
    x = np.zeros((f_cnt, n, n))
    for idx, (f, i, j) in enumerate(var_index):
        x[f, i, j] = res.x[idx]
    for f in range(f_cnt):
        j_star = int(np.flatnonzero(allowed[f])[0])
        for i in np.flatnonzero(workload[f] <= 0):
            x[f, i, j_star] = 1.0
    delay = float(sum(total_delay(x[f], workload[f], delays) for f in range(f_cnt)))
    cost = float(sum(cost_increment(x[f], workload[f], cpr[f]) for f in range(f_cnt)))
    return lam_t * delay + lam_c * cost, delay, cost, x


def _memory_ok(scenario: Scenario, placements: np.ndarray) -> bool:
    mem = scenario.function_memory()
    used = placements.astype(float).T @ mem
    return bool(np.all(used <= scenario.topology.memory + 1e-9))


# --------------------------------------------------------------------------
# branch and bound
# --------------------------------------------------------------------------


class _Budget:
    def __init__(self, lp_budget: int | None, time_budget_s: float | None):
        self.lp_budget = lp_budget
        self.deadline = time.monotonic() + time_budget_s if time_budget_s else None
        self.lp_solves = 0
        self.exhausted = False

    def charge(self) -> bool:
        """Account for one LP; False when the budget is already gone."""
        if self.lp_budget is not None and self.lp_solves >= self.lp_budget:
            self.exhausted = True
            return False
        if self.deadline is not None and time.monotonic() > self.deadline:
            self.exhausted = True
            return False
        self.lp_solves += 1
        return True


def solve_joint_milp(
    scenario: Scenario,
    workload: np.ndarray | None = None,
    alpha: float = 0.0,
    node_budget: int | None = None,
    time_budget_s: float | None = None,
    tie_exact: bool | None = None,
) -> JointSolution:
    """Joint placement with optimality proof (unless a budget interrupts).

    tie_exact=True resolves objective ties to the lexicographically smallest
    placement (row-major over function then node) by exploring equal-bound
    subtrees; that is affordable only on small instances, so by default it
    turns on when F*N <= 9 and budgeted equal-bound pruning is used above.
    """
    workload = scenario.workload if workload is None else workload
    f_cnt, n = workload.shape
    if tie_exact is None:
        tie_exact = f_cnt * n <= 9
    lam_t, lam_c = joint_objective_weights(scenario, workload, alpha)
    mem = scenario.function_memory()
    node_mem = scenario.topology.memory
    budget = _Budget(node_budget, time_budget_s)
    order = [(f, i) for f in range(f_cnt) for i in range(n)]
    depth_total = f_cnt * n

    best: dict | None = None

    def lex_tuple(placements: np.ndarray) -> tuple:
        return tuple(int(v) for v in placements.ravel())

    def allowed_mask(assign: np.ndarray) -> np.ndarray:
        return (assign != 0).reshape(f_cnt, n)  # undecided (-1) or chosen (1)

    def relax_bound(assign: np.ndarray):
        if not budget.charge():
            return None
        sol = _joint_routing_lp(scenario, workload, allowed_mask(assign), lam_t, lam_c)
        return ("infeasible",) if sol is None else ("ok", sol[0])

    def leaf_eval(assign: np.ndarray):
        nonlocal best
        placements = (assign == 1).reshape(f_cnt, n)
        if not _memory_ok(scenario, placements):
            return
        if not budget.charge():
            return
        sol = _joint_routing_lp(scenario, workload, placements, lam_t, lam_c)
        if sol is None:
            return
        obj, delay, cost, x = sol
        tup = lex_tuple(placements)
        if (
            best is None
            or obj < best["obj"] - _TIE_TOL
            or (tie_exact and obj <= best["obj"] + _TIE_TOL and tup < best["lex"])
        ):
            best = {
                "obj": obj,
                "lex": tup,
                "placements": placements.copy(),
                "delay": delay,
                "cost": cost,
                "x": x,
            }

    root = np.full(depth_total, -1, dtype=np.int8)
    root_bound = relax_bound(root)
    if root_bound is None or root_bound[0] == "infeasible":
        return JointSolution(
            status="infeasible",
            placements=None,
            routes=None,
            total_delay=None,
            total_cost=None,
            objective=None,
            optimal=root_bound is not None,
            lp_solves=budget.lp_solves,
            metadata={"alpha": alpha, "tie_exact": tie_exact},
        )

    # stack entries: (depth, assignment, inherited bound); LIFO, 1-branch on top
    stack: list[tuple[int, np.ndarray, float]] = [(0, root, root_bound[1])]
    while stack:
        if budget.exhausted:
            break
        depth, assign, bound = stack.pop()
        if best is not None:
            if bound > best["obj"] + _TIE_TOL:
                continue
            if bound >= best["obj"] - _TIE_TOL:
                if not tie_exact:
                    continue
                floor_lex = tuple(max(int(v), 0) for v in assign)
                if best["lex"] <= floor_lex:
                    continue  # no lex improvement possible in this subtree
        if depth == depth_total:
            leaf_eval(assign)
            continue
        f, i = order[depth]
        # 0-branch: node i excluded for f; needs a fresh relaxation
        child0 = assign.copy()
        child0[depth] = 0
        row = child0[f * n : (f + 1) * n]
        if np.any(row != 0):  # at least one host still possible for f
            b0 = relax_bound(child0)
            if b0 is not None and b0[0] == "ok":
                stack.append((depth + 1, child0, b0[1]))
        # 1-branch: same relaxation as parent, just check memory of decided 1s
        child1 = assign.copy()
        child1[depth] = 1
        ones = (child1 == 1).reshape(f_cnt, n)
        if float(ones[:, i].astype(float) @ mem) <= node_mem[i] + 1e-9:
            stack.append((depth + 1, child1, bound))

    if best is None:
        status = "budget-exhausted" if budget.exhausted else "infeasible"
        return JointSolution(
            status=status,
            placements=None,
            routes=None,
            total_delay=None,
            total_cost=None,
            objective=None,
            optimal=False,
            lp_solves=budget.lp_solves,
            metadata={"alpha": alpha, "tie_exact": tie_exact},
        )
    routes = {f: best["x"][f] for f in range(f_cnt)}
    return JointSolution(
        status="optimal" if not budget.exhausted else "feasible",
        placements=best["placements"],
        routes=routes,
        total_delay=best["delay"],
        total_cost=best["cost"],
        objective=best["obj"],
        optimal=not budget.exhausted,
        lp_solves=budget.lp_solves,
        metadata={"alpha": alpha, "tie_exact": tie_exact},
    )


# --------------------------------------------------------------------------
# greedy baselines
# --------------------------------------------------------------------------


def _greedy_solution(
    scenario: Scenario, workload: np.ndarray, deployment, violations: list[str], method: str
) -> JointSolution:
    placements = np.zeros((scenario.n_functions, scenario.n_nodes), dtype=bool)
    routes: dict[int, np.ndarray] = {}
    for f, p in deployment.placements.items():
        placements[f] = p
    routes.update(deployment.routes)
    return JointSolution(
        status="feasible" if not violations else "infeasible",
        placements=placements if not violations else None,
        routes=routes if not violations else None,
        total_delay=deployment.total_delay if not violations else None,
        total_cost=deployment.total_cost if not violations else None,
        objective=None,
        optimal=False,
        metadata={"method": method, "violations": violations},
    )


def solve_vsvbp(scenario: Scenario, workload: np.ndarray | None = None) -> JointSolution:
    """Pack each function onto as few nodes as possible, biggest bins first.

    Simplified vector-bin-packing heuristic: per function (heaviest first),
    nodes with enough free memory are tried in order of decreasing routable
    core headroom until the traffic fits, then routed optimally on that set.
    """
    workload = scenario.workload if workload is None else workload
    deployment = initial_deployment(scenario.topology)
    violations: list[str] = []
    n = scenario.n_nodes
    for f in make_queue(scenario, workload):
        fn = scenario.functions[f]
        cpr = fn.cores_per_request_vec(n)
        fits_mem = deployment.available_memory >= fn.memory - 1e-9
        headroom = np.maximum(deployment.available_cores, 0.0) / cpr
        candidates = sorted(
            (int(i) for i in np.flatnonzero(fits_mem)),
            key=lambda i: (-headroom[i], i),
        )
        solution = None
        placement = np.zeros(n, dtype=bool)
        for i in candidates:
            placement[i] = True
            trial = solve_routing(
                RoutingProblem(
                    delays=scenario.topology.delays,
                    workload_row=workload[f],
                    placement=placement,
                    available_cores=deployment.available_cores,
                    cores_per_request=cpr,
                )
            )
            if trial.feasible:
                solution = trial
                break
        if solution is None:
            violations.append(f"{f}:unplaceable")
            continue
        delay = solution.objective_delay
        cost = cost_increment(solution.routing, workload[f], cpr)
        deployment = deployment.commit(
            fn, placement, solution.routing, workload[f], delay, cost
        )
    return _greedy_solution(scenario, workload, deployment, violations, "vsvbp")


def solve_creua(scenario: Scenario, workload: np.ndarray | None = None) -> JointSolution:
    """Criticality-ordered nearest-node allocation.

    Simplified interpretation: functions are served in decreasing
    criticality; each source node's traffic greedily fills the closest nodes
    that have memory and core headroom. No backtracking.
    """
    workload = scenario.workload if workload is None else workload
    n = scenario.n_nodes
    crit = scenario.criticality or tuple(0 for _ in scenario.functions)
    base = make_queue(scenario, workload)
    order = sorted(base, key=lambda f: (-crit[f], base.index(f)))
    deployment = initial_deployment(scenario.topology)
    violations: list[str] = []
    for f in order:
        fn = scenario.functions[f]
        cpr = fn.cores_per_request_vec(n)
        cores_left = deployment.available_cores.copy()
        placement = np.zeros(n, dtype=bool)
        routing = np.zeros((n, n))
        failed = False
        sources = sorted(range(n), key=lambda i: (-workload[f, i], i))
        for i in sources:
            remaining = workload[f, i]
            if remaining <= 0:
                continue
            for j in sorted(range(n), key=lambda j: (scenario.topology.delays[i, j], j)):
                if remaining <= 1e-12:
                    break
                if not placement[j] and deployment.available_memory[j] < fn.memory - 1e-9:
                    continue
                absorb = min(remaining, max(cores_left[j], 0.0) / cpr[j])
                if absorb <= 0:
                    continue
                placement[j] = True
                routing[i, j] += absorb / workload[f, i]
                cores_left[j] -= absorb * cpr[j]
                remaining -= absorb
            if remaining > 1e-9:
                failed = True
                break
        if failed or (workload[f].sum() > 0 and not placement.any()):
            violations.append(f"{f}:unplaceable")
            continue
        if not placement.any():  # zero traffic: lowest node with memory room
            hosts = np.flatnonzero(deployment.available_memory >= fn.memory - 1e-9)
            if hosts.size == 0:
                violations.append(f"{f}:unplaceable")
                continue
            placement[int(hosts[0])] = True
        for i in range(n):
            if workload[f, i] <= 0:
                routing[i] = 0.0
                routing[i, int(np.flatnonzero(placement)[0])] = 1.0
            else:
                routing[i] /= routing[i].sum()  # absorb split-loop float dust
        delay = total_delay(routing, workload[f], scenario.topology.delays)
        cost = cost_increment(routing, workload[f], cpr)
        deployment = deployment.commit(fn, placement, routing, workload[f], delay, cost)
    return _greedy_solution(scenario, workload, deployment, violations, "cr-eua")
