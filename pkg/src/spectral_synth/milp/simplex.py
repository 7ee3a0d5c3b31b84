"""Bounded-variable simplex on a dense tableau.

Every row gets a slack column so the all-slack basis is always available.
Row senses become slack bounds: ``<=`` gives s in [0, inf), ``>=`` gives
s in (-inf, 0] and ``==`` fixes s at 0.  The tableau carries the transformed
right-hand side as its last column.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg.blas import dger

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
COST_PERTURBATION = 1e-6  # relative size of the cost shift that breaks dual degeneracy
REL_PIVOT_TOL = 1e-7  # pivots smaller than this times the largest entry in their row/column are noise
REFACTOR_EVERY = 100
ILL_CONDITIONED = 1e12  # tableau entries beyond this mean the basis is numerically singular

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class SimplexError(RuntimeError):
    pass


class _BasisLost(Exception):
    """Refactoring found the basis numerically singular."""


def slack_bounds(senses):
    lo = np.array([-np.inf if s == ">=" else 0.0 for s in senses])
    hi = np.array([0.0 if s in (">=", "==") else np.inf for s in senses])
    return lo, hi


class DenseSimplex:
    """Minimise ``c.x`` subject to row constraints and ``lb <= x <= ub``.

    The object keeps its basis between calls, so after changing bounds or
    appending rows a further :meth:`solve` starts from the previous optimum
    (dual simplex), which is what branch-and-bound relies on.
    """

    def __init__(self, A, b, senses, c, lb, ub):
        A = np.asarray(A, dtype=float).reshape(len(b), -1) if len(b) else np.zeros((0, len(c)))
        self.n = len(c)
        self.m = A.shape[0]
        self.A = np.hstack([A, np.eye(self.m)])
        self.b = np.asarray(b, dtype=float).copy()
        slo, shi = slack_bounds(senses)
        self.L = np.concatenate([np.asarray(lb, dtype=float), slo])
        self.U = np.concatenate([np.asarray(ub, dtype=float), shi])
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(self.m)])
        self.iterations = 0
        self._since_refactor = 0
        self.reset_basis()

    # ---- basis bookkeeping -------------------------------------------------
    @property
    def N(self) -> int:
        return self.n + self.m

    def reset_basis(self):
        self.basis = np.arange(self.n, self.n + self.m)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.T = np.hstack([self.A, self.b[:, None]])
        self.d = self.c.copy()
        self.at_upper = np.zeros(self.N, dtype=bool)
        self._bounds_changed()
        self._place_all()

    def _bounds_changed(self):
        fin_lo = np.isfinite(self.L)
        fin_hi = np.isfinite(self.U)
        self._rest = np.where(fin_lo, self.L, np.where(fin_hi, self.U, 0.0))
        self._fin_lo, self._fin_hi = fin_lo, fin_hi
        self._span = self.L < self.U
        self._both_inf = ~fin_lo & ~fin_hi
        self._tol_lo = FEAS_TOL * (1.0 + np.abs(np.where(fin_lo, self.L, 0.0)))
        self._tol_hi = FEAS_TOL * (1.0 + np.abs(np.where(fin_hi, self.U, 0.0)))

    def _place_all(self, cols=None):
        """Put nonbasic columns on the bound that keeps them dual feasible."""
        if cols is None:
            cols = np.flatnonzero(~self.is_basic)
        d = self.d[cols]
        lo_ok = self._fin_lo[cols]
        hi_ok = self._fin_hi[cols]
        cur = self.at_upper[cols]
        up = np.where(d < -OPT_TOL, hi_ok | (cur & ~lo_ok), np.where(d > OPT_TOL, ~lo_ok & hi_ok, cur))
        up = np.where(~lo_ok & hi_ok, True, up)
        up = np.where(~hi_ok, False, up)
        up &= self._span[cols]
        self.at_upper[cols] = up

    def snapshot(self):
        return self.basis.copy(), self.at_upper.copy()

    def load_basis(self, basis, at_upper) -> bool:
        """Install a stored basis (rows added since are covered by their slacks)."""
        basis = np.asarray(basis, dtype=np.int64)
        extra = np.arange(self.n + len(basis), self.N)
        basis = np.concatenate([basis, extra])
        B = self.A[:, basis]
        try:
            T = np.linalg.solve(B, np.hstack([self.A, self.b[:, None]]))
        except np.linalg.LinAlgError:
            self.reset_basis()
            return False
        if not np.all(np.isfinite(T)) or np.abs(T).max() > ILL_CONDITIONED:
            self.reset_basis()
            return False
        self.basis = basis
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[basis] = True
        self.T = T
        self.d = self.c - self.c[basis] @ T[:, :-1]
        au = np.zeros(self.N, dtype=bool)
        au[: len(at_upper)] = at_upper
        self.at_upper = au & ~self.is_basic
        self._place_all()
        self._since_refactor = 0
        return True

    def refactor(self):
        if not self.load_basis(self.basis[: self.m], self.at_upper):
            raise SimplexError("basis became singular")

    # ---- model edits -------------------------------------------------------
    def set_bounds(self, lb, ub):
        """Replace the structural bounds, keeping the basis."""
        self.L[: self.n] = lb
        self.U[: self.n] = ub
        self._bounds_changed()
        self._place_all(np.flatnonzero(~self.is_basic[: self.n]))

    def add_rows(self, rows, rhs, senses):
        """Append rows; their slacks enter the basis, so dual feasibility is kept."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        k = rows.shape[0]
        if k == 0:
            return
        rhs = np.asarray(rhs, dtype=float)
        m, n = self.m, self.n
        slo, shi = slack_bounds(senses)
        newA = np.zeros((m + k, n + m + k))
        newA[:m, : n + m] = self.A
        newA[m:, :n] = rows
        newA[m:, n + m:] = np.eye(k)
        self.A = newA
        self.b = np.concatenate([self.b, rhs])
        self.L = np.concatenate([self.L, slo])
        self.U = np.concatenate([self.U, shi])
        self.c = np.concatenate([self.c, np.zeros(k)])
        # tableau rows of the new constraints, expressed in the current basis
        full = np.zeros((k, n + m + k + 1))
        full[:, :n] = rows
        full[:, n + m: n + m + k] = np.eye(k)
        full[:, -1] = rhs
        oldT = np.zeros((m, n + m + k + 1))
        oldT[:, : n + m] = self.T[:, :-1]
        oldT[:, -1] = self.T[:, -1]
        coef = full[:, self.basis]
        full -= coef @ oldT
        self.T = np.vstack([oldT, full])
        self.d = np.concatenate([self.d, np.zeros(k)])
        self.basis = np.concatenate([self.basis, np.arange(n + m, n + m + k)])
        self.is_basic = np.concatenate([self.is_basic, np.ones(k, dtype=bool)])
        self.at_upper = np.concatenate([self.at_upper, np.zeros(k, dtype=bool)])
        self.m = m + k
        self._bounds_changed()

    # ---- core --------------------------------------------------------------
    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.U, self._rest)
        x[self.basis] = 0.0
        xb = self.T[:, -1] - self.T[:, :-1] @ x
        x[self.basis] = xb
        return x

    def _pivot(self, r, j):
        T = self.T
        prow = T[r] / T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        if T.flags.c_contiguous:
            # in-place rank-one update on the transposed (Fortran-ordered) view
            dger(-1.0, prow, col, a=T.T, overwrite_a=1)
        else:
            T -= col[:, None] * prow[None, :]
        T[r] = prow
        self.d -= self.d[j] * prow[:-1]
        self.d[j] = 0.0
        leave = self.basis[r]
        self.basis[r] = j
        self.is_basic[leave] = False
        self.is_basic[j] = True
        self.at_upper[j] = False
        self.iterations += 1
        self._since_refactor += 1
        return leave

    def _maybe_refactor(self):
        if self._since_refactor >= REFACTOR_EVERY:
            au = self.at_upper.copy()
            if not self.load_basis(self.basis[: self.m], au):
                raise _BasisLost()
            self.at_upper = au & ~self.is_basic

    def _movable(self):
        free = ~self.is_basic & self._span
        at_up = self.at_upper
        both = self._both_inf
        can_inc = free & (~at_up | both)
        can_dec = free & (at_up | both)
        return can_inc, can_dec

    def dual_feasible(self) -> bool:
        can_inc, can_dec = self._movable()
        return not (np.any(can_inc & (self.d < -OPT_TOL)) or np.any(can_dec & (self.d > OPT_TOL)))

    def primal_infeasibility(self, x=None):
        x = self.values() if x is None else x
        bas = self.basis
        xb = x[bas]
        below = (self.L[bas] - xb) - self._tol_lo[bas]
        above = (xb - self.U[bas]) - self._tol_hi[bas]
        return below, above

    def _iteration_caps(self):
        soft = 3 * (self.m + self.N)
        return soft, 200 * (self.m + self.N) + 1000

    def dual_simplex(self, zero_cost: bool = False) -> str:
        soft, hard = self._iteration_caps()
        it = 0
        while True:
            self._maybe_refactor()
            x = self.values()
            below, above = self.primal_infeasibility(x)
            viol = np.maximum(below, above)
            bad = np.flatnonzero(viol > 0)
            if bad.size == 0:
                return OPTIMAL
            bland = it >= soft
            if it >= hard:
                raise SimplexError("dual simplex iteration limit")
            it += 1
            if bland:
                r = bad[np.argmin(self.basis[bad])]
            else:
                r = bad[np.argmax(viol[bad])]
            raise_it = below[r] > 0
            row = self.T[r, :-1]
            can_inc, can_dec = self._movable()
            tol = max(PIVOT_TOL, REL_PIVOT_TOL * np.abs(row[can_inc | can_dec]).max(initial=0.0))
            if raise_it:
                elig = (can_inc & (row < -tol)) | (can_dec & (row > tol))
            else:
                elig = (can_inc & (row > tol)) | (can_dec & (row < -tol))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return INFEASIBLE
            mag = np.abs(row[cand])
            if zero_cost:
                ratios = np.zeros(cand.size)
                relaxed = ratios
            else:
                ratios = np.abs(self.d[cand]) / mag
                relaxed = (np.abs(self.d[cand]) + OPT_TOL) / mag
            if bland:
                j = cand[ratios <= ratios.min() + 1e-12].min()
            else:
                # Harris pass: any step up to the relaxed minimum, largest pivot wins
                ties = np.flatnonzero(ratios <= relaxed.min())
                j = cand[ties[np.argmax(mag[ties])]]
            leave = self._pivot(r, j)
            self.at_upper[leave] = not raise_it
            if zero_cost:
                self.d[:] = 0.0

    def primal_simplex(self) -> str:
        soft, hard = self._iteration_caps()
        it = 0
        while True:
            self._maybe_refactor()
            x = self.values()
            can_inc, can_dec = self._movable()
            score = np.where(can_inc & (self.d < -OPT_TOL), -self.d, 0.0)
            score = np.maximum(score, np.where(can_dec & (self.d > OPT_TOL), self.d, 0.0))
            cand = np.flatnonzero(score > 0)
            if cand.size == 0:
                return OPTIMAL
            bland = it >= soft
            if it >= hard:
                raise SimplexError("primal simplex iteration limit")
            it += 1
            j = cand.min() if bland else cand[np.argmax(score[cand])]
            direction = 1.0 if (can_inc[j] and self.d[j] < -OPT_TOL) else -1.0
            da = direction * self.T[:, j]
            xb = x[self.basis]
            lo, hi = self.L[self.basis], self.U[self.basis]
            lim = np.full(self.m, np.inf)
            tol = max(PIVOT_TOL, REL_PIVOT_TOL * np.abs(da).max(initial=0.0))
            dec = da > tol
            inc = da < -tol
            fin_lo = dec & np.isfinite(lo)
            fin_hi = inc & np.isfinite(hi)
            lim[fin_lo] = (xb[fin_lo] - lo[fin_lo]) / da[fin_lo]
            lim[fin_hi] = (hi[fin_hi] - xb[fin_hi]) / (-da[fin_hi])
            lim = np.maximum(lim, 0.0)
            if bland or not self.m:
                t_row = lim.min() if self.m else np.inf
                ties = np.flatnonzero(lim <= t_row + 1e-12)
            else:
                relaxed = np.full(self.m, np.inf)
                tol = self._tol_lo[self.basis]
                relaxed[fin_lo] = (xb[fin_lo] - lo[fin_lo] + tol[fin_lo]) / da[fin_lo]
                tol = self._tol_hi[self.basis]
                relaxed[fin_hi] = (hi[fin_hi] - xb[fin_hi] + tol[fin_hi]) / (-da[fin_hi])
                ties = np.flatnonzero(lim <= relaxed.min())
                t_row = lim[ties].min() if ties.size else np.inf
            t_flip = self.U[j] - self.L[j]
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                return UNBOUNDED
            if t_flip <= t_row:
                self.at_upper[j] = direction > 0
                self.iterations += 1
                continue
            if bland:
                r = ties[np.argmin(self.basis[ties])]
            else:
                r = ties[np.argmax(np.abs(da[ties]))]
            to_upper = bool(inc[r])
            leave = self._pivot(r, j)
            self.at_upper[leave] = to_upper

    def solve(self) -> str:
        """Optimise from the current basis; returns a status string.

        If the basis degrades numerically the solve restarts once from the
        all-slack basis.
        """
        try:
            return self._solve()
        except _BasisLost:
            self.reset_basis()
            try:
                return self._solve()
            except _BasisLost:
                raise SimplexError("basis became singular twice") from None

    def _perturbed_dual(self) -> str:
        """Dual simplex on costs nudged away from zero reduced cost.

        Nonbasic columns get a small shift in their dual-feasible direction
        (a fixed pseudo-random pattern, so runs repeat); the true costs come
        back afterwards and the primal simplex removes any leftover error.
        """
        c0 = self.c
        nonbasic = ~self.is_basic & self._span & ~self._both_inf
        jitter = np.random.default_rng(0).random(self.N)
        shift = COST_PERTURBATION * (1.0 + np.abs(c0)) * (1.0 + jitter)
        shift = np.where(nonbasic, np.where(self.at_upper, -shift, shift), 0.0)
        self.c = c0 + shift
        self.d = self.d + shift
        try:
            return self.dual_simplex()
        finally:
            self.c = c0
            self.d = self.c - self.c[self.basis] @ self.T[:, :-1]

    def _solve(self) -> str:
        if self.dual_feasible():
            status = self._perturbed_dual()
            if status != OPTIMAL:
                return status
            return self.primal_simplex()
        below, above = self.primal_infeasibility()
        if np.any(below > 0) or np.any(above > 0):
            status = self.dual_simplex(zero_cost=True)
            self.d = self.c - self.c[self.basis] @ self.T[:, :-1]
            if status != OPTIMAL:
                return status
        return self.primal_simplex()

    def objective(self, x=None) -> float:
        x = self.values() if x is None else x
        return float(self.c @ x)
