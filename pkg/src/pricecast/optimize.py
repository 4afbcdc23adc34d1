"""Exact finite-horizon price scheduling under a sell-through floor.

Maximize total revenue sum_t r[l_t, t] choosing one ladder level per
bucket, subject to the inventory never going negative and at least a
fraction alpha of the starting stock being sold by the horizon end.
Small instances are enumerated outright; larger ones run a depth-first
branch-and-bound whose bounds are provably optimistic, so both paths are
exact. A vectorized brute-force enumerator serves as an independent
oracle in tests.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import OptimizeError

# feasibility tolerance on inventory comparisons (demands are real-valued)
FEAS_TOL = 1e-9

ENUMERATION_LIMIT = 10**6  # solve() switches to branch-and-bound above this
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class PricingProblem:
    """Ladder prices, forecast demand matrix, stock and sell-through floor.

    Revenue is always derived as prices[i] * demand[i, t]; sales are not
    capped at remaining inventory, so a plan whose demand overshoots the
    stock is infeasible rather than truncated.
    """

    prices: np.ndarray  # (k,)
    demand: np.ndarray  # (k, n)
    s0: float
    alpha: float
    revenue: np.ndarray = None  # derived, do not pass

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        demand = np.asarray(self.demand, dtype=float)
        if prices.ndim != 1 or demand.ndim != 2 or demand.shape[0] != prices.size:
            raise OptimizeError(
                f"shape mismatch: prices {prices.shape} vs demand {demand.shape}"
            )
        if prices.size < 1 or demand.shape[1] < 1:
            raise OptimizeError("need at least one level and one bucket")
        if not np.all(np.isfinite(demand)) or np.any(demand < 0):
            raise OptimizeError("demand must be finite and >= 0")
        if not np.all(prices > 0):
            raise OptimizeError("prices must be > 0")
        if not self.s0 > 0:
            raise OptimizeError(f"starting inventory must be > 0, got {self.s0}")
        if not 0.0 <= self.alpha <= 1.0:
            raise OptimizeError(f"alpha must lie in [0,1], got {self.alpha}")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "revenue", prices[:, None] * demand)

    @property
    def k(self) -> int:
        return self.prices.size

    @property
    def n(self) -> int:
        return self.demand.shape[1]


@dataclass(frozen=True)
class PricingPlan:
    """A feasible level schedule with its inventory path."""

    levels: tuple  # 0-based ladder indices, one per bucket
    inventory: tuple  # S_0 .. S_n
    objective: float
    sell_through: float


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # "optimal" | "infeasible"
    plan: PricingPlan | None
    nodes: int
    solver: str


def _make_plan(problem: PricingProblem, levels: Sequence[int], objective: float) -> PricingPlan:
    inv = [float(problem.s0)]
    for t, l in enumerate(levels):
        inv.append(inv[-1] - float(problem.demand[l, t]))
    st = (problem.s0 - inv[-1]) / problem.s0
    return PricingPlan(
        levels=tuple(int(l) for l in levels),
        inventory=tuple(inv),
        objective=float(objective),
        sell_through=float(st),
    )


def solve(problem: PricingProblem, enumeration_limit: int = ENUMERATION_LIMIT) -> SolveOutcome:
    """Provably optimal plan, or infeasible status.

    Depth-first search in lexicographic level order; the first plan found
    at the best objective is kept, which realizes the lexicographically
    smallest optimal sequence. Above ``enumeration_limit`` candidate
    sequences, optimistic revenue and reachability bounds prune the tree;
    the bounds carry a small slack so float noise in the suffix sums can
    never prune a sequence that exact arithmetic would keep.
    """
    k, n = problem.k, problem.n
    use_bounds = k**n > enumeration_limit
    s0, alpha = problem.s0, problem.alpha
    need = alpha * s0

    # column-major python floats: per-node work stays allocation-free
    dcols = [[float(problem.demand[l, t]) for l in range(k)] for t in range(n)]
    rcols = [[float(problem.revenue[l, t]) for l in range(k)] for t in range(n)]

    # suffix bounds: best revenue, largest and smallest sellable demand
    max_r = [0.0] * (n + 1)
    max_d = [0.0] * (n + 1)
    min_d = [0.0] * (n + 1)
    for t in range(n - 1, -1, -1):
        max_r[t] = max(rcols[t]) + max_r[t + 1]
        max_d[t] = max(dcols[t]) + max_d[t + 1]
        min_d[t] = min(dcols[t]) + min_d[t + 1]
    slack = 1e-6 * max(1.0, max_r[0])  # float-noise guard on the revenue bound
    dslack = 1e-6 * max(1.0, max_d[0])

    best_obj = -np.inf
    best_seq = None
    nodes = 0
    seq = [0] * n

    def rec(t: int, rev: float, sold: float) -> None:
        nonlocal best_obj, best_seq, nodes
        if t == n:
            if sold >= need - FEAS_TOL and rev > best_obj:
                best_obj = rev
                best_seq = tuple(seq)
            return
        if use_bounds:
            if rev + max_r[t] <= best_obj - slack:
                return
            if sold + max_d[t] < need - FEAS_TOL - dslack:
                return  # sell-through floor unreachable even at max demand
            if sold + min_d[t] > s0 + FEAS_TOL + dslack:
                return  # stock overrun unavoidable even at min demand
        dcol = dcols[t]
        rcol = rcols[t]
        for l in range(k):
            nodes += 1
            nsold = sold + dcol[l]
            if nsold > s0 + FEAS_TOL:
                continue  # inventory would go negative; no completion recovers
            seq[t] = l
            rec(t + 1, rev + rcol[l], nsold)

    rec(0, 0.0, 0.0)
    solver = "branch-and-bound" if use_bounds else "enumeration"
    if best_seq is None:
        return SolveOutcome(status="infeasible", plan=None, nodes=nodes, solver=solver)
    return SolveOutcome(
        status="optimal",
        plan=_make_plan(problem, best_seq, best_obj),
        nodes=nodes,
        solver=solver,
    )


def brute_force(problem: PricingProblem, chunk: int = 200_000) -> SolveOutcome:
    """Oracle: score every level sequence with vectorized arithmetic.

    Sequences are generated in lexicographic order and accumulated
    left-to-right, so objectives and the tie-break match solve() float
    for float.
    """
    k, n = problem.k, problem.n
    total = k**n
    if total > BRUTE_FORCE_LIMIT:
        raise OptimizeError(f"instance too large for brute force: {k}^{n} = {total}")
    s0, alpha = problem.s0, problem.alpha
    need = alpha * s0
    pows = np.array([k ** (n - 1 - t) for t in range(n)], dtype=np.int64)

    best_obj = -np.inf
    best_seq = None
    for base in range(0, total, chunk):
        idx = np.arange(base, min(base + chunk, total), dtype=np.int64)
        levels = (idx[:, None] // pows[None, :]) % k
        obj = np.zeros(idx.size)
        sold = np.zeros(idx.size)
        feas = np.ones(idx.size, dtype=bool)
        for t in range(n):
            lt = levels[:, t]
            sold = sold + problem.demand[lt, t]
            feas &= sold <= s0 + FEAS_TOL
            obj = obj + problem.revenue[lt, t]
        feas &= sold >= need - FEAS_TOL
        masked = np.where(feas, obj, -np.inf)
        j = int(np.argmax(masked))  # first hit = lexicographically smallest
        if masked[j] > best_obj:
            best_obj = float(masked[j])
            best_seq = tuple(int(v) for v in levels[j])
    if best_seq is None:
        return SolveOutcome(status="infeasible", plan=None, nodes=total, solver="brute_force")
    return SolveOutcome(
        status="optimal",
        plan=_make_plan(problem, best_seq, best_obj),
        nodes=total,
        solver="brute_force",
    )


def sell_through(plan: PricingPlan, s0: float) -> float:
    """Fraction of the starting stock sold over the plan horizon."""
    if not s0 > 0:
        raise OptimizeError(f"starting inventory must be > 0, got {s0}")
    return (s0 - plan.inventory[-1]) / s0


def sweep_alpha(problem: PricingProblem, alphas: Sequence[float]) -> list:
    """One exact solve per sell-through floor, ascending."""
    values = [float(a) for a in alphas]
    if any(not 0.0 <= a <= 1.0 for a in values):
        raise OptimizeError(f"alpha values must lie in [0,1]: {values}")
    if values != sorted(values):
        raise OptimizeError(f"alpha values must be ascending: {values}")
    return [(a, solve(replace(problem, alpha=a, revenue=None))) for a in values]


def write_plan_csv(grid, outcome: SolveOutcome, path, alpha: float | None = None) -> None:
    """Export a plan against its grid; infeasible runs write the header only.

    ``grid`` supplies the bucket labels and prices; when ``alpha`` is
    given an alpha column is prepended (sweep exports).
    """
    header = ["bucket", "level", "price", "demand", "revenue", "remaining_inventory"]
    if alpha is not None:
        header = ["alpha"] + header
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        if outcome.status != "optimal":
            return
        plan = outcome.plan
        for t, bucket in enumerate(grid.buckets):
            l = plan.levels[t]
            row = [
                bucket.isoformat(),
                l + 1,
                repr(float(grid.ladder.levels[l])),
                repr(float(grid.demand[l, t])),
                repr(float(grid.revenue[l, t])),
                repr(float(plan.inventory[t + 1])),
            ]
            if alpha is not None:
                row = [repr(float(alpha))] + row
            w.writerow(row)
