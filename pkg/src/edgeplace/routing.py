"""Optimal traffic routing for one function across its hosting nodes.

Each node i emits workload_row[i] requests/s for the function; requests may
be served on any hosting node j at delay cost delays[i, j] per request, and
node j can absorb at most available_cores[j] / cores_per_request[j]
requests/s. Minimizing total delay under those constraints is a capacitated
transportation problem in the shipped rates y[i, j] = x[i, j] * w[i], which
is solved here with a transportation simplex (deterministic min-cost initial
basis, Bland's rule). A dummy zero-cost source absorbs spare capacity.

brute_force_routing enumerates every basic solution of the same polytope
and is the independent oracle used by the tests; it shares no solver code.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

_EPS_REDUCED = 1e-10  # reduced-cost threshold for entering variable
_EPS_FEAS = 1e-9
_MAX_PIVOTS = 20000


@dataclass(frozen=True)
class RoutingProblem:
    delays: np.ndarray  # (N, N) ms
    workload_row: np.ndarray  # (N,) requests/s for this function
    placement: np.ndarray  # (N,) bool, hosting nodes
    available_cores: np.ndarray  # (N,) residual core-units
    cores_per_request: np.ndarray  # (N,) core-units consumed per request/s


@dataclass(frozen=True)
class RoutingSolution:
    status: str  # "optimal" or "infeasible"
    routing: np.ndarray | None  # (N, N), rows sum to 1 when optimal
    objective_delay: float | None  # total weighted delay, ms*requests/s

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def chosen_nodes(placement: np.ndarray) -> list[int]:
    """Indices selected by a boolean placement vector, ascending."""
    return [int(i) for i in np.flatnonzero(np.asarray(placement, dtype=bool))]


def total_delay(routing: np.ndarray, workload_row: np.ndarray, delays: np.ndarray) -> float:
    """Aggregate delay of a routing split: sum_ij x[i,j] * w[i] * delta[i,j]."""
    return float(np.sum(routing * delays * np.asarray(workload_row, dtype=float)[:, None]))


def _capacities(problem: RoutingProblem, chosen: list[int]) -> np.ndarray:
    cores = np.maximum(problem.available_cores[chosen], 0.0)
    cpr = problem.cores_per_request[chosen]
    return cores / cpr


def _expand_solution(
    problem: RoutingProblem, chosen: list[int], sources: list[int], y: np.ndarray
) -> RoutingSolution:
    n = problem.workload_row.shape[0]
    x = np.zeros((n, n))
    w = problem.workload_row
    for si, i in enumerate(sources):
        row = y[si] / w[i]
        s = row.sum()
        if s > 0:
            row = row / s  # exact unit row sum regardless of simplex dust
        x[i, chosen] = row
    for i in range(n):
        if w[i] <= 0:
            x[i, chosen[0]] = 1.0  # no traffic: route to lowest-index host
    return RoutingSolution(
        status="optimal", routing=x, objective_delay=total_delay(x, w, problem.delays)
    )


def solve_routing(problem: RoutingProblem) -> RoutingSolution:
    """Minimum-delay routing, or infeasible if demand exceeds capacity."""
    chosen = chosen_nodes(problem.placement)
    if not chosen:
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    w = np.asarray(problem.workload_row, dtype=float)
    sources = [int(i) for i in np.flatnonzero(w > 0)]
    caps = _capacities(problem, chosen)
    supply_total = float(w[sources].sum())
    caps_total = float(caps.sum())
    if supply_total > caps_total + _EPS_FEAS * max(1.0, caps_total):
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    if not sources:
        return _expand_solution(problem, chosen, sources, np.zeros((0, len(chosen))))
    cost = problem.delays[np.ix_(sources, chosen)].astype(float)
    # dummy source soaks up spare capacity; its cost is one constant for the
    # whole row (so the optimum is unchanged) and higher than any real cell
    # (so real traffic claims equally-cheap columns in index order first)
    cost = np.vstack([cost, np.full(len(chosen), cost.max() + 1.0 if cost.size else 1.0)])
    supply = np.append(w[sources], max(caps_total - supply_total, 0.0))
    y = _transport_simplex(cost, supply, caps)
    return _expand_solution(problem, chosen, sources, y[:-1])


# --------------------------------------------------------------------------
# transportation simplex internals
# --------------------------------------------------------------------------


def _initial_basis(cost: np.ndarray, supply: np.ndarray, caps: np.ndarray):
    """Minimum-cost greedy start; ties go to (lower cost, lower column, lower row)."""
    m, n = cost.shape
    y = np.zeros((m, n))
    rs = supply.astype(float).copy()
    rc = caps.astype(float).copy()
    row_active = [True] * m
    col_active = [True] * n
    rows_left, cols_left = m, n
    basis: list[tuple[int, int]] = []
    order = sorted(((cost[i, j], j, i) for i in range(m) for j in range(n)))
    for _, j, i in order:
        if rows_left == 0 or cols_left == 0:
            break
        if not (row_active[i] and col_active[j]):
            continue
        alloc = min(rs[i], rc[j])
        y[i, j] = alloc
        basis.append((i, j))
        rs[i] -= alloc
        rc[j] -= alloc
        row_done = rs[i] <= 0.0
        col_done = rc[j] <= 0.0
        if row_done and col_done:
            if rows_left == 1 and cols_left == 1:
                row_active[i] = False
                col_active[j] = False
                rows_left -= 1
                cols_left -= 1
            elif rows_left > 1:
                row_active[i] = False
                rows_left -= 1
            else:
                col_active[j] = False
                cols_left -= 1
        elif row_done:
            row_active[i] = False
            rows_left -= 1
        else:
            col_active[j] = False
            cols_left -= 1
    _repair_basis(basis, cost, m, n)
    return y, basis


def _repair_basis(basis: list[tuple[int, int]], cost: np.ndarray, m: int, n: int) -> None:
    """Pad the basis with zero cells until it spans all rows and columns.

    Float dust in the greedy can leave the basis one short of the m+n-1
    spanning tree the dual computation needs; connect components with the
    cheapest admissible cells (never creating a cycle).
    """
    parent = list(range(m + n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in basis:
        parent[find(i)] = find(m + j)
    if len(basis) == m + n - 1:
        return
    order = sorted(((cost[i, j], j, i) for i in range(m) for j in range(n)))
    for _, j, i in order:
        if len(basis) == m + n - 1:
            break
        ri, rj = find(i), find(m + j)
        if ri != rj:
            parent[ri] = rj
            basis.append((i, j))


def _duals(basis: list[tuple[int, int]], cost: np.ndarray, m: int, n: int):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    rows_adj: list[list[int]] = [[] for _ in range(m)]
    cols_adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in basis:
        rows_adj[i].append(j)
        cols_adj[j].append(i)
    u[0] = 0.0
    stack: list[tuple[bool, int]] = [(True, 0)]
    while stack:
        is_row, a = stack.pop()
        if is_row:
            for j in rows_adj[a]:
                if np.isnan(v[j]):
                    v[j] = cost[a, j] - u[a]
                    stack.append((False, j))
        else:
            for i in cols_adj[a]:
                if np.isnan(u[i]):
                    u[i] = cost[i, a] - v[a]
                    stack.append((True, i))
    if np.any(np.isnan(u)) or np.any(np.isnan(v)):
        raise RuntimeError("basis does not span the transportation graph")
    return u, v


def _cycle(basis: list[tuple[int, int]], enter: tuple[int, int], m: int, n: int):
    """Cells of the unique basis cycle closed by `enter`, with alternating signs."""
    rows_adj: list[list[int]] = [[] for _ in range(m)]
    cols_adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in basis:
        rows_adj[i].append(j)
        cols_adj[j].append(i)
    start, goal = enter
    # BFS from row node `start` to column node `goal` through basic cells
    prev: dict[tuple[bool, int], tuple[bool, int]] = {}
    seen = {(True, start)}
    frontier = [(True, start)]
    while frontier:
        nxt = []
        for is_row, a in frontier:
            neigh = (
                [(False, j) for j in rows_adj[a]]
                if is_row
                else [(True, i) for i in cols_adj[a]]
            )
            for node in neigh:
                if node not in seen:
                    seen.add(node)
                    prev[node] = (is_row, a)
                    nxt.append(node)
        if (False, goal) in seen:
            break
        frontier = nxt
    node = (False, goal)
    path = [node]
    while node != (True, start):
        node = prev[node]
        path.append(node)
    path.reverse()  # row start ... col goal
    minus, plus = [], []
    for k in range(len(path) - 1):
        a, b = path[k], path[k + 1]
        cell = (a[1], b[1]) if a[0] else (b[1], a[1])
        (minus if k % 2 == 0 else plus).append(cell)
    return plus, minus


def _transport_simplex(cost: np.ndarray, supply: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Balanced transportation solve; returns the flow matrix y."""
    m, n = cost.shape
    y, basis = _initial_basis(cost, supply, caps)
    basic_mask = np.zeros((m, n), dtype=bool)
    for i, j in basis:
        basic_mask[i, j] = True
    for _ in range(_MAX_PIVOTS):
        u, v = _duals(basis, cost, m, n)
        reduced = cost - u[:, None] - v[None, :]
        reduced[basic_mask] = 0.0
        candidates = np.argwhere(reduced < -_EPS_REDUCED)
        if candidates.size == 0:
            return np.maximum(y, 0.0)
        enter = (int(candidates[0][0]), int(candidates[0][1]))  # Bland: first in row-major order
        plus, minus = _cycle(basis, enter, m, n)
        theta = min(y[c] for c in minus)
        leave = min(c for c in minus if y[c] <= theta)
        for c in plus:
            y[c] += theta
        for c in minus:
            y[c] -= theta
        y[enter[0], enter[1]] += theta
        y[leave] = 0.0
        basis.remove(leave)
        basis.append(enter)
        basic_mask[leave] = False
        basic_mask[enter] = True
    raise RuntimeError("transportation simplex exceeded pivot limit")


# --------------------------------------------------------------------------
# independent oracle: exhaustive basic-solution enumeration
# --------------------------------------------------------------------------


def brute_force_routing(problem: RoutingProblem, max_bases: int = 500_000) -> RoutingSolution:
    """Optimal routing by enumerating all basic solutions of the flow polytope.

    Intended for small instances only (the optimum of a linear program lies
    at a vertex, and every vertex is a basic solution, so this search is
    complete). Raises ValueError when the combination count exceeds
    max_bases.
    """
    chosen = chosen_nodes(problem.placement)
    if not chosen:
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    w = np.asarray(problem.workload_row, dtype=float)
    sources = [int(i) for i in np.flatnonzero(w > 0)]
    caps = _capacities(problem, chosen)
    if float(w[sources].sum()) > float(caps.sum()) + _EPS_FEAS * max(1.0, float(caps.sum())):
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    if not sources:
        return _expand_solution(problem, chosen, sources, np.zeros((0, len(chosen))))
    m, n = len(sources), len(chosen)
    nvar = m * n + n  # flows plus one slack per capacity
    rows = m + n
    from math import comb

    if comb(nvar, rows) > max_bases:
        raise ValueError(f"instance too large for brute force: C({nvar},{rows}) bases")
    A = np.zeros((rows, nvar))
    for i in range(m):
        A[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        A[m + j, j:m * n:n] = 1.0
        A[m + j, m * n + j] = 1.0
    b = np.concatenate([w[sources], caps])
    cost_vec = np.concatenate(
        [problem.delays[np.ix_(sources, chosen)].ravel(), np.zeros(n)]
    )
    combos = np.array(list(itertools.combinations(range(nvar), rows)))
    mats = A[:, combos].transpose(1, 0, 2)  # (K, rows, rows)
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-9  # entries are 0/1 so true determinants are integers
    if not np.any(ok):
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    rhs = np.broadcast_to(b[:, None], (int(ok.sum()), rows, 1)).copy()
    sols = np.linalg.solve(mats[ok], rhs)[:, :, 0]
    feas = np.all(sols >= -_EPS_FEAS, axis=1)
    if not np.any(feas):
        return RoutingSolution(status="infeasible", routing=None, objective_delay=None)
    objs = np.einsum("kr,kr->k", sols, cost_vec[combos[ok]])
    objs = np.where(feas, objs, np.inf)
    best = int(np.argmin(objs))
    y = np.zeros(nvar)
    y[combos[ok][best]] = np.maximum(sols[best], 0.0)
    return _expand_solution(problem, chosen, sources, y[: m * n].reshape(m, n))
