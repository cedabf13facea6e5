"""Optimal transport solvers: exact balanced OT and L2-penalized unbalanced OT.

The unbalanced problem minimizes

    sum_ij T_ij C_ij + lambda1 * ||T 1 - a||_2^2 + lambda2 * ||T' 1 - b||_2^2

over nonnegative plans T.  It is solved with multiplicative
majorization-minimization updates

    T_ij <- T_ij * max(0, 2 l1 a_i + 2 l2 b_j - C_ij)
                 / (2 l1 (T 1)_i + 2 l2 (T' 1)_j)

which descend monotonically because the objective is a nonnegative quadratic
program with elementwise-nonnegative curvature.  First-order stationarity is
tracked through the complementarity residual max_ij |min(T_ij, grad_ij)|.

Balanced OT (hard marginal constraints) is solved exactly with the
transportation simplex: north-west-corner start, dual-based pricing, and
Bland's lowest-index rule once degenerate pivots start repeating, which
prevents cycling.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matrixio import EmbeddingMatrix, write_matrix

BALANCED = math.inf


@dataclass(frozen=True)
class TransportPlan:
    """A nonnegative transport matrix plus solver diagnostics.

    ``lambda1``/``lambda2`` are ``math.inf`` for balanced OT.  The trace
    holds the objective at the initial point and after every iteration (MM)
    or pivot (simplex).
    """

    plan: np.ndarray
    lambda1: float
    lambda2: float
    objective: float
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    kkt_residual: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.plan.shape

    def transport_cost(self, cost: np.ndarray) -> float:
        """Plain transport term <T, C> without the penalties."""
        return float(np.vdot(self.plan, cost))

    def total_mass(self) -> float:
        return float(self.plan.sum())


def uniform_weights(count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("need at least one instance")
    return np.full(count, 1.0 / count)


def marginals(plan: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row sums and column sums of a plan."""
    plan = np.asarray(plan, dtype=np.float64)
    return plan.sum(axis=1), plan.sum(axis=0)


def uot_objective(
    plan: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    lambda1: float,
    lambda2: float,
) -> float:
    """Transport cost plus squared-error marginal penalties."""
    plan = np.asarray(plan, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if plan.shape != cost.shape or plan.shape != (a.size, b.size):
        raise ValueError(
            f"shape mismatch: plan {plan.shape}, cost {cost.shape}, "
            f"weights ({a.size}, {b.size})"
        )
    dr = plan.sum(axis=1) - a
    dc = plan.sum(axis=0) - b
    return float(np.vdot(plan, cost)) + lambda1 * float(dr @ dr) + lambda2 * float(dc @ dc)


def kkt_residual(
    plan: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    lambda1: float,
    lambda2: float,
) -> float:
    """Max complementarity violation |min(T_ij, grad_ij)| over all cells."""
    grad = _gradient(plan, a, b, cost, lambda1, lambda2)
    return float(np.abs(np.minimum(plan, grad)).max())


def _gradient(plan, a, b, cost, lambda1, lambda2):
    dr = plan.sum(axis=1) - a
    dc = plan.sum(axis=0) - b
    return cost + (2.0 * lambda1) * dr[:, None] + (2.0 * lambda2) * dc[None, :]


def _validate_problem(a, b, cost):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or cost.shape != (a.size, b.size):
        raise ValueError(
            f"inconsistent shapes: a {a.shape}, b {b.shape}, cost {cost.shape}"
        )
    if a.size == 0 or b.size == 0:
        raise ValueError("need at least one instance on each side")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("weights must be nonnegative")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix has non-finite entries")
    if (cost < 0).any():
        raise ValueError("cost matrix has negative entries")
    return a, b, cost


def solve_uot_mm(
    a: np.ndarray,
    b: np.ndarray,
    cost: np.ndarray,
    lambda1: float,
    lambda2: float,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    rel_obj_tol: float = 1e-10,
) -> TransportPlan:
    """Minimize the L2-penalized unbalanced transport objective.

    Starts from the all-positive outer product of the weights and applies
    the multiplicative update until the complementarity residual drops below
    ``tol``, the relative objective change over one iteration drops below
    ``rel_obj_tol``, or ``max_iter`` is reached.  When the penalties are so
    stiff that multiplicative reallocation would stall (the near-balanced
    regime), the iteration is seeded from the exact OT vertex instead.

    The multiplicative tail is sublinear once decaying cells dominate, so
    whenever progress flattens and the surviving support is small, the
    solver finishes with an exact active-set refinement (solve the
    stationarity system on the support, Lawson-Hanson style backtracking on
    negative cells).  Refinement steps and the one-cell reopenings used to
    fix zero cells with negative gradient both strictly decrease the
    objective, so the recorded trace stays non-increasing end to end.

    Non-convergence is not an exception: the plan comes back with
    ``converged=False`` and the final residual.
    """
    a, b, cost = _validate_problem(a, b, cost)
    if lambda1 == 0.0 and lambda2 == 0.0:
        # No penalty and nonnegative costs: the empty plan is optimal.
        plan = np.zeros_like(cost)
        return TransportPlan(
            plan=plan,
            lambda1=0.0,
            lambda2=0.0,
            objective=0.0,
            iterations=0,
            objective_trace=np.zeros(1),
            converged=True,
            kkt_residual=kkt_residual(plan, a, b, cost, 0.0, 0.0),
        )
    if lambda1 <= 0 or lambda2 <= 0 or not (math.isfinite(lambda1) and math.isfinite(lambda2)):
        raise ValueError("lambda1 and lambda2 must be positive and finite")

    l1, l2 = float(lambda1), float(lambda2)
    numer = mm_numerator(a, b, cost, l1, l2)

    plan = _initial_plan(a, b, cost, l1, l2)
    trace = [uot_objective(plan, a, b, cost, l1, l2)]
    iterations = 0
    expansions = 0
    max_expansions = 8 * (a.size + b.size)
    refine_after = 50  # patience before periodic refinement attempts
    last_refine = 0
    failed_refines = 0  # consecutive failures; resets on any progress
    mass_scale = max(float(a.max()), float(b.max()))

    while iterations < max_iter:
        plan = mm_step(plan, numer, l1, l2)
        iterations += 1

        dr = plan.sum(axis=1) - a
        dc = plan.sum(axis=0) - b
        obj = float(np.vdot(plan, cost)) + l1 * float(dr @ dr) + l2 * float(dc @ dc)
        trace.append(obj)

        grad = cost + (2.0 * l1) * dr[:, None] + (2.0 * l2) * dc[None, :]
        residual = float(np.abs(np.minimum(plan, grad)).max())
        stalled = abs(trace[-2] - obj) <= rel_obj_tol * max(1.0, abs(trace[-2]))
        slow_tail = abs(trace[-2] - obj) <= 1e-6 * max(1.0, abs(trace[-2]))

        refined_now = False
        want_refine = (
            residual > tol
            and failed_refines < 8
            and (stalled or (slow_tail and iterations - last_refine >= refine_after))
        )
        if want_refine:
            last_refine = iterations
            accepted = False
            support = plan > 1e-13 * mass_scale
            if 0 < support.sum() <= min(4 * (a.size + b.size), 600):
                refined = _refine_on_support(plan, support, a, b, cost, l1, l2)
                if refined is not None:
                    new_obj = uot_objective(refined, a, b, cost, l1, l2)
                    if new_obj <= obj:
                        new_grad = _gradient(refined, a, b, cost, l1, l2)
                        new_residual = float(np.abs(np.minimum(refined, new_grad)).max())
                        refined_now = new_residual < 0.999 * residual or new_obj < obj
                        plan, obj, grad, residual = refined, new_obj, new_grad, new_residual
                        trace.append(obj)
                        accepted = refined_now
            if accepted:
                failed_refines = 0
                refine_after = 50
            else:
                failed_refines += 1
                refine_after = min(2 * refine_after, 10_000)

        if residual <= tol or stalled or refined_now:
            reopen = np.where(plan <= 0.0, grad, 0.0)
            worst = int(np.argmin(reopen))
            if reopen.flat[worst] < -tol and expansions < max_expansions:
                # entering the most negative zero cell with its
                # coordinate-optimal mass decreases the objective by at
                # least tol^2 / (4 (l1 + l2)), so these rounds terminate;
                # refinement then reconsolidates on the grown support
                expansions += 1
                plan = plan.copy()
                plan.flat[worst] = -reopen.flat[worst] / (2.0 * (l1 + l2))
                trace.append(uot_objective(plan, a, b, cost, l1, l2))
                failed_refines = 0
                refine_after = 10
                last_refine = iterations
                continue
            if residual <= tol:
                break
            if stalled and not refined_now:
                break

    final_residual = kkt_residual(plan, a, b, cost, l1, l2)
    return TransportPlan(
        plan=plan,
        lambda1=l1,
        lambda2=l2,
        objective=trace[-1],
        iterations=iterations,
        objective_trace=np.asarray(trace),
        converged=final_residual <= tol,
        kkt_residual=final_residual,
    )


def _refine_on_support(plan, support, a, b, cost, l1, l2):
    """Exact stationary point restricted to the given support, or None.

    Support cells form a bipartite graph on rows and columns.  Cycles in
    that graph span directions that leave both marginals unchanged, so the
    objective is linear along them; the first phase shifts mass around each
    cycle in its non-increasing direction until a cell empties, leaving a
    forest.  On a forest the marginal map is injective, the stationarity
    system grad = 0 is nonsingular, and the second phase solves it exactly,
    backtracking Lawson-Hanson style whenever the solution goes negative.
    Every step is non-increasing in the objective.
    """
    rows, cols = np.nonzero(support)
    values = plan[rows, cols].astype(np.float64).copy()

    rows, cols, values = _break_cycles(rows, cols, values, cost)
    if rows.size == 0:
        return None
    active = np.ones(rows.size, dtype=bool)

    for _ in range(rows.size + 1):
        r, c = rows[active], cols[active]
        h = (2.0 * l1) * (r[:, None] == r[None, :]) + (2.0 * l2) * (c[:, None] == c[None, :])
        rhs = (2.0 * l1) * a[r] + (2.0 * l2) * b[c] - cost[r, c]
        try:
            solution = np.linalg.solve(h, rhs)
            # one round of iterative refinement; chains in the forest can
            # leave the system ill-conditioned enough to matter
            solution += np.linalg.solve(h, rhs - h @ solution)
        except np.linalg.LinAlgError:
            return None
        if (solution >= 0.0).all():
            new_plan = np.zeros_like(plan)
            new_plan[r, c] = solution
            return new_plan
        # step from the current point toward the solution up to the first
        # cell that would cross zero, then freeze that cell at zero
        base = values[active]
        delta = solution - base
        shrinking = delta < 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = np.where(shrinking, base / -delta, np.inf)
        alpha = float(steps.min())
        if not math.isfinite(alpha):
            return None
        alpha = min(alpha, 1.0)
        moved = base + alpha * delta
        blocked = int(np.argmin(steps))
        moved[blocked] = 0.0
        values[active] = moved
        active_idx = np.flatnonzero(active)
        active[active_idx[blocked]] = False
        if not active.any():
            return None
    return None


def _break_cycles(rows, cols, values, cost):
    """Empty one cell per support cycle by a marginal-preserving shift.

    Mass moves around the alternating cycle in whichever direction does not
    increase the transport cost, until the limiting cell reaches zero; that
    cell leaves the support.  Repeats until the support graph is a forest.
    """
    m = int(rows.max()) + 1 if rows.size else 0
    while True:
        cells = list(zip(rows.tolist(), cols.tolist()))
        cycle = _support_cycle(cells, m)
        if cycle is None:
            return rows, cols, values
        index = {cell: k for k, cell in enumerate(cells)}
        members = np.array([index[cell] for cell in cycle])
        signs = np.array([1.0 if k % 2 == 0 else -1.0 for k in range(len(cycle))])
        direction = float((signs * cost[rows[members], cols[members]]).sum())
        if direction > 0:
            signs = -signs  # move the other way around so cost cannot grow
        minus = members[signs < 0]
        theta = float(values[minus].min())
        values[members] += theta * signs
        drop = minus[int(np.argmin(values[minus]))]
        keep = np.ones(rows.size, dtype=bool)
        keep[drop] = False
        rows, cols, values = rows[keep], cols[keep], values[keep]
        values = np.maximum(values, 0.0)


def _support_cycle(cells, m):
    """One cycle of the bipartite support graph as a cell list, or None.

    Cells are edges between row node i and column node m + j.  The returned
    cycle alternates rows and columns, starting with the edge that closed
    the cycle; consecutive cells share a node, so alternating +/- shifts
    preserve all marginals.
    """
    parent: dict[int, int] = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    adjacency: dict[int, list[int]] = {}
    for i, j in cells:
        u, v = i, m + j
        ru, rv = find(u), find(v)
        if ru == rv:
            path = _tree_path(adjacency, v, u)
            cycle = [(i, j)]
            for x, y in zip(path, path[1:]):
                cycle.append((x, y - m) if x < m else (y, x - m))
            return cycle
        parent[ru] = rv
        adjacency.setdefault(u, []).append(v)
        adjacency.setdefault(v, []).append(u)
    return None


def _tree_path(adjacency, start, goal):
    """Node path from start to goal in the forest built so far."""
    parents = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adjacency.get(node, ()):
            if nb not in parents:
                parents[nb] = node
                queue.append(nb)
    path = [goal]
    while parents[path[-1]] is not None:
        path.append(parents[path[-1]])
    return path


def mm_step(plan: np.ndarray, numer: np.ndarray, l1: float, l2: float) -> np.ndarray:
    """One multiplicative update; ``numer`` is the constant clipped numerator
    max(0, 2 l1 a_i + 2 l2 b_j - C_ij).  Cells whose row and column mass both
    vanished keep the value zero instead of dividing 0/0."""
    row = plan.sum(axis=1)
    col = plan.sum(axis=0)
    denom = (2.0 * l1) * row[:, None] + (2.0 * l2) * col[None, :]
    tiny = denom < 1e-300
    if tiny.any():
        denom[tiny] = 1.0
        out = plan * numer / denom
        out[tiny] = 0.0
        return out
    return plan * numer / denom


def mm_numerator(a: np.ndarray, b: np.ndarray, cost: np.ndarray, l1: float, l2: float) -> np.ndarray:
    return np.maximum(0.0, (2.0 * l1) * a[:, None] + (2.0 * l2) * b[None, :] - cost)


def _initial_plan(a, b, cost, l1, l2) -> np.ndarray:
    """Outer-product seed, or the OT vertex in the stiff-penalty regime.

    The multiplicative update reallocates mass between competing cells at a
    relative rate of roughly max|C| / (2 (l1 min a + l2 min b)) per
    iteration; once that rate falls below 1e-4 the outer product would need
    hundreds of thousands of iterations, while the balanced optimum is
    already the correct limit point.
    """
    total_a, total_b = float(a.sum()), float(b.sum())
    if total_a <= 0.0 or total_b <= 0.0:
        return np.zeros_like(cost)
    if (a > 0).all() and (b > 0).all():
        stall_rate = float(cost.max()) / (
            2.0 * (l1 * float(a.min()) + l2 * float(b.min()))
        )
        balanced = abs(total_a - total_b) <= 1e-9 * max(total_a, total_b)
        if stall_rate < 1e-4 and balanced:
            return solve_exact_ot(a, b, cost).plan.copy()
    return np.outer(a, b) / total_b


# ---------------------------------------------------------------------------
# exact balanced OT: transportation simplex
# ---------------------------------------------------------------------------


def solve_exact_ot(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> TransportPlan:
    """Solve min <T, C> subject to T 1 = a, T' 1 = b, T >= 0 exactly."""
    a, b, cost = _validate_problem(a, b, cost)
    if abs(float(a.sum()) - float(b.sum())) > 1e-12 * max(1.0, float(a.sum())):
        raise ValueError(
            f"infeasible weights: sum(a)={a.sum():.17g} != sum(b)={b.sum():.17g}"
        )
    m, n = cost.shape

    plan, basis = _northwest_corner(a, b)
    row_basis = [set() for _ in range(m)]  # columns basic in each row
    col_basis = [set() for _ in range(n)]
    for i, j in basis:
        row_basis[i].add(j)
        col_basis[j].add(i)

    tol = 1e-11 * max(1.0, float(np.abs(cost).max()))
    trace = [float(np.vdot(plan, cost))]
    degenerate_streak = 0
    max_pivots = max(10_000, 20 * m * n)

    for _ in range(max_pivots):
        u, v = _duals(cost, row_basis, col_basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        for i in range(m):  # basic cells price to zero by construction
            for j in row_basis[i]:
                reduced[i, j] = np.inf

        if degenerate_streak < 40:
            i0, j0 = np.unravel_index(int(np.argmin(reduced)), reduced.shape)
            if reduced[i0, j0] >= -tol:
                break
        else:
            candidates = np.argwhere(reduced < -tol)
            if candidates.size == 0:
                break
            i0, j0 = map(int, candidates[0])  # lowest-index rule (Bland)

        cycle = _find_cycle(int(i0), int(j0), row_basis, col_basis, m)
        minus = cycle[1::2]
        theta = min(plan[c] for c in minus)
        leaving = min(c for c in minus if plan[c] <= theta)
        degenerate_streak = degenerate_streak + 1 if theta <= 0.0 else 0

        for k, c in enumerate(cycle):
            plan[c] += theta if k % 2 == 0 else -theta
        plan[leaving] = 0.0
        row_basis[leaving[0]].discard(leaving[1])
        col_basis[leaving[1]].discard(leaving[0])
        row_basis[i0].add(j0)
        col_basis[j0].add(i0)
        trace.append(trace[-1] + theta * float(reduced[i0, j0]))
    else:
        raise RuntimeError("transportation simplex exceeded the pivot budget")

    np.clip(plan, 0.0, None, out=plan)
    objective = float(np.vdot(plan, cost))
    trace[-1] = objective
    return TransportPlan(
        plan=plan,
        lambda1=BALANCED,
        lambda2=BALANCED,
        objective=objective,
        iterations=len(trace) - 1,
        objective_trace=np.asarray(trace),
        converged=True,
        kkt_residual=0.0,
    )


def _northwest_corner(a, b):
    """Initial basic feasible plan with exactly m + n - 1 basic cells.

    Ties close only one of row/column per step, leaving explicit zero basic
    cells on degenerate instances.
    """
    m, n = a.size, b.size
    plan = np.zeros((m, n))
    rem_a = a.astype(np.float64).copy()
    rem_b = b.astype(np.float64).copy()
    basis = []
    i = j = 0
    while True:
        step = min(rem_a[i], rem_b[j])
        plan[i, j] = step
        basis.append((i, j))
        rem_a[i] -= step
        rem_b[j] -= step
        if i == m - 1 and j == n - 1:
            break
        if i < m - 1 and (j == n - 1 or rem_a[i] <= rem_b[j]):
            i += 1
        else:
            j += 1
    return plan, basis


def _duals(cost, row_basis, col_basis, m, n):
    """Potentials with u[0] = 0, propagated over the basis spanning tree."""
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    stack = [(0, True)]  # (index, is_row)
    while stack:
        node, is_row = stack.pop()
        if is_row:
            for j in row_basis[node]:
                if math.isnan(v[j]):
                    v[j] = cost[node, j] - u[node]
                    stack.append((j, False))
        else:
            for i in col_basis[node]:
                if math.isnan(u[i]):
                    u[i] = cost[i, node] - v[node]
                    stack.append((i, True))
    return u, v


def _find_cycle(i0, j0, row_basis, col_basis, m):
    """Alternating cycle closed by the entering cell (i0, j0).

    Returns cells starting with the entering cell; odd positions are the
    cells whose mass decreases.  The basis is a spanning tree, so the path
    from column j0 back to row i0 is unique.
    """
    # BFS over tree nodes: rows are 0..m-1, columns are m..m+n-1.
    start, goal = m + j0, i0
    parent = {start: None}
    queue = deque([start])
    while queue and goal not in parent:
        node = queue.popleft()
        if node < m:
            neighbors = (m + j for j in row_basis[node])
        else:
            neighbors = iter(col_basis[node - m])
        for nb in neighbors:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    if goal not in parent:
        raise RuntimeError("basis is not connected; invalid simplex state")

    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    # node sequence: i0, ..., j0, alternating rows and columns
    cells = [(i0, j0)]
    for x, y in zip(path, path[1:]):
        cells.append((x, y - m) if x < m else (y, x - m))
    return cells


# ---------------------------------------------------------------------------
# plan export
# ---------------------------------------------------------------------------


def export_plan_csv(
    plan: TransportPlan,
    row_ids: list[str],
    col_ids: list[str],
    path: str | Path,
) -> None:
    """Write (row id, column id, mass) rows for every cell of the plan."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row_id,col_id,mass\n")
        for i, rid in enumerate(row_ids):
            for j, cid in enumerate(col_ids):
                fh.write(f"{rid},{cid},{float(plan.plan[i, j])!r}\n")


def export_plan_block(plan: TransportPlan, row_ids: list[str], path: str | Path) -> None:
    """Dump the dense plan in the embedding-matrix binary layout."""
    write_matrix(EmbeddingMatrix(plan.plan.astype(np.float64), tuple(row_ids)), path)
