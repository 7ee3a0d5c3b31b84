"""LP relaxation and best-bound branch-and-bound on top of DenseSimplex."""
from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from .model import Constraint, MilpModel, MilpSolution
from .simplex import FEAS_TOL, INFEASIBLE, OPTIMAL, UNBOUNDED, DenseSimplex

INT_TOL = 1e-6
GAP_TOL = 1e-9
MAX_FRACTIONAL_ROUNDS = 30
POOL_BATCH = 25  # pool rows activated per LP round


class _Relaxation:
    """The LP behind a model: static rows plus whichever pool rows are active.

    Pool rows enter the LP when a solution violates them.  A stored node
    state keeps only the pool rows that bind at that node, so LPs rebuilt
    for far-away nodes stay small however large the pool grows.
    """

    def __init__(self, model: MilpModel):
        self.model = model
        self.n = model.num_vars
        self.sign = -1.0 if model.sense == "max" else 1.0
        self.c = self.sign * model.objective
        rows = model.constraints
        self.static_A = np.zeros((len(rows), self.n))
        for i, r in enumerate(rows):
            self.static_A[i, r.index] = r.coeffs
        self.static_b = [r.rhs for r in rows]
        self.static_s = [r.sense for r in rows]
        self.n_static = len(rows)
        self.lb, self.ub = model.bounds()
        self._pool_cache = None
        self.cuts_added = 0
        self.iterations = 0
        self.lp = None
        self.build([])

    def build(self, pool_ids):
        if self.lp is not None:
            self.iterations += self.lp.iterations
        pool = self.model.cut_pool
        A = np.zeros((self.n_static + len(pool_ids), self.n))
        A[: self.n_static] = self.static_A
        b = list(self.static_b)
        senses = list(self.static_s)
        for t, pid in enumerate(pool_ids):
            A[self.n_static + t, pool[pid].index] = pool[pid].coeffs
            b.append(pool[pid].rhs)
            senses.append(pool[pid].sense)
        self.lp = DenseSimplex(A, b, senses, self.c, self.lb, self.ub)
        self.in_lp = list(pool_ids)
        self.active = np.zeros(len(pool), dtype=bool)
        self.active[list(pool_ids)] = True

    @property
    def total_iterations(self) -> int:
        return self.iterations + self.lp.iterations

    def _pool_matrix(self):
        pool = self.model.cut_pool
        if self._pool_cache is None or self._pool_cache[0] != len(pool):
            old = self._pool_cache
            k0 = 0 if old is None else old[0]
            P = np.zeros((len(pool), self.n))
            if old is not None:
                P[:k0] = old[1]
            for i in range(k0, len(pool)):
                P[i, pool[i].index] = pool[i].coeffs
            rhs = np.array([r.rhs for r in pool])
            kind = np.array([{"<=": 0, ">=": 1, "==": 2}[r.sense] for r in pool], dtype=np.int64)
            self._pool_cache = (len(pool), P, rhs, kind)
        if len(self.active) < len(pool):
            self.active = np.concatenate([self.active, np.zeros(len(pool) - len(self.active), dtype=bool)])
        return self._pool_cache[1:]

    def _activate(self, idx):
        P, _, _ = self._pool_matrix()
        pool = self.model.cut_pool
        self.lp.add_rows(P[idx], [pool[i].rhs for i in idx], [pool[i].sense for i in idx])
        self.active[idx] = True
        self.in_lp.extend(idx)

    def violated_pool_rows(self, x) -> list:
        if not self.model.cut_pool:
            return []
        P, rhs, kind = self._pool_matrix()
        act = P @ x
        tol = FEAS_TOL * (1.0 + np.abs(rhs))
        viol = np.where(kind == 0, act - rhs, np.where(kind == 1, rhs - act, np.abs(act - rhs)))
        hit = np.flatnonzero(~self.active & (viol > tol))
        if hit.size > POOL_BATCH:
            hit = hit[np.argsort(-viol[hit], kind="stable")[:POOL_BATCH]]
        return hit.tolist()

    def _separate(self, x, integral) -> bool:
        new = []
        for sep in self.model.separators:
            for row in sep(x, integral) or []:
                if isinstance(row, Constraint):
                    new.append(row)
        if not new:
            return False
        start = len(self.model.cut_pool)
        self.model.cut_pool.extend(new)
        self.cuts_added += len(new)
        self._activate(list(range(start, start + len(new))))
        return True

    def snapshot(self):
        """Node state: binding pool rows, basis keys and structural bound flags."""
        lp = self.lp
        slack0 = self.n + self.n_static
        keep = [pid for t, pid in enumerate(self.in_lp) if not lp.is_basic[slack0 + t]]
        keys = []
        for col in lp.basis.tolist():
            if col < slack0:
                keys.append(col)  # structural column or static-row slack
            # basic slacks of pool rows are dropped with their rows
        return keep, keys, lp.at_upper[: self.n].copy()

    def restore(self, state):
        keep, keys, at_upper = state
        self.build(keep)
        self.lp.load_basis(np.array(keys, dtype=np.int64), at_upper)

    def solve(self, int_mask):
        """Solve the LP, then add violated pool rows and separated cuts until clean."""
        rounds = 0
        while True:
            status = self.lp.solve()
            if status != OPTIMAL:
                return status, None
            x = self.lp.values()[: self.n]
            viol = self.violated_pool_rows(x)
            if viol:
                self._activate(viol)
                continue
            integral = bool(np.all(np.abs(x[int_mask] - np.round(x[int_mask])) <= INT_TOL))
            if integral or rounds < MAX_FRACTIONAL_ROUNDS:
                rounds += 1
                if self._separate(x, integral):
                    continue
            return OPTIMAL, x


def _finish(model, status, x, obj, bound, nodes, relax):
    return MilpSolution(status, x, obj, bound, nodes, relax.total_iterations, relax.cuts_added,
                        dict(model.names))


def solve_lp(model: MilpModel) -> MilpSolution:
    """Continuous relaxation (integrality dropped, pool rows and separators kept)."""
    relax = _Relaxation(model)
    status, x = relax.solve(np.zeros(model.num_vars, dtype=bool))
    if status != OPTIMAL:
        return _finish(model, status, None, math.nan, math.nan, 0, relax)
    obj = float(model.objective @ x)
    return _finish(model, OPTIMAL, x, obj, obj, 0, relax)


def solve_milp(model: MilpModel, node_limit: int | None = None, time_limit: float | None = None,
               cutoff: float | None = None, log=None, progress=None) -> MilpSolution:
    """Branch-and-bound with best-bound node selection.

    Ties in the bound go to the deeper node, then to the earlier one, so the
    ``<= floor`` child (queued first) is explored first.  The branching
    variable is the most fractional one, lowest index on ties.

    ``cutoff`` discards every node that cannot beat it (in the model's
    sense); if nothing survives the status is ``cutoff``.  Hitting
    ``node_limit`` or ``time_limit`` returns the incumbent unproven.

    ``progress(nodes, bound, incumbent)`` is called after every node with
    the global bound and incumbent value in the model's sense (incumbent is
    None until one exists).
    """
    relax = _Relaxation(model)
    sign = relax.sign
    int_mask = model.integer_mask()
    int_idx = np.flatnonzero(int_mask)
    lb0, ub0 = relax.lb.copy(), relax.ub.copy()
    t0 = time.monotonic()

    incumbent = None
    inc_val = math.inf  # minimisation form
    if cutoff is not None:
        inc_val = sign * cutoff + GAP_TOL * (1.0 + abs(cutoff))

    def prunable(bound):
        return bound >= inc_val - GAP_TOL * (1.0 + abs(inc_val))

    counter = itertools.count()
    heap = [(-math.inf, 0, next(counter), lb0, ub0, None, -1)]
    nodes = 0
    loaded_from = None  # id of the node whose final basis is loaded in the LP
    best_bound_seen = -math.inf
    status_out = OPTIMAL
    while heap:
        if node_limit is not None and nodes >= node_limit:
            status_out = "node_limit"
            break
        if time_limit is not None and time.monotonic() - t0 > time_limit:
            status_out = "time_limit"
            break
        bound, negdepth, _, lb, ub, warm, parent = heapq.heappop(heap)
        if prunable(bound):
            continue
        nodes += 1
        if progress is not None and nodes > 1:
            # best-bound order: the popped bound is the global one
            progress(nodes - 1, sign * bound, None if incumbent is None else sign * inc_val)
        node_id = nodes
        if warm is not None and parent != loaded_from:
            relax.restore(warm)
        relax.lp.set_bounds(lb, ub)
        status, x = relax.solve(int_mask)
        loaded_from = node_id
        if status == UNBOUNDED:
            if nodes == 1:
                return _finish(model, UNBOUNDED, None, math.nan, math.nan, nodes, relax)
            continue
        if status != OPTIMAL:
            continue
        val = sign * float(model.objective @ x)
        if nodes == 1:
            best_bound_seen = val
        if prunable(val):
            continue
        frac = np.abs(x[int_idx] - np.round(x[int_idx]))
        if frac.size == 0 or frac.max() <= INT_TOL:
            xs = x.copy()
            xs[int_idx] = np.round(xs[int_idx])
            incumbent = xs
            inc_val = val
            if log:
                log(f"node {nodes}: incumbent {sign * val:.10g}")
            continue
        # most fractional: distance to 0.5 smallest, first index on ties
        score = np.abs(frac - 0.5)
        k = int_idx[int(np.argmin(score))]
        warm_state = relax.snapshot()
        depth = -negdepth + 1
        down_ub = ub.copy()
        down_ub[k] = math.floor(x[k])
        up_lb = lb.copy()
        up_lb[k] = math.ceil(x[k])
        heapq.heappush(heap, (val, -depth, next(counter), lb, down_ub, warm_state, node_id))
        heapq.heappush(heap, (val, -depth, next(counter), up_lb, ub, warm_state, node_id))

    if progress is not None:
        final_bound = (sign * min([h[0] for h in heap if not prunable(h[0])] + [inc_val])
                       if status_out != OPTIMAL else sign * inc_val)
        progress(nodes, final_bound, None if incumbent is None else sign * inc_val)
    open_bounds = [h[0] for h in heap if not prunable(h[0])]
    if incumbent is None:
        if status_out in ("node_limit", "time_limit"):
            return _finish(model, status_out, None, math.nan, math.nan, nodes, relax)
        final = "cutoff" if cutoff is not None else INFEASIBLE
        return _finish(model, final, None, math.nan, math.nan, nodes, relax)
    obj = float(model.objective @ incumbent)
    if status_out == OPTIMAL:
        bound = obj
    else:
        bound = sign * min(open_bounds + [inc_val]) if open_bounds else obj
    return _finish(model, status_out, incumbent, obj, bound, nodes, relax)


def add_cut(model: MilpModel, coeffs, sense: str = ">=", rhs: float = 0.0, name: str = "") -> Constraint:
    return model.add_cut(coeffs, sense, rhs, name)
