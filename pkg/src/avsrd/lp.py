"""Small dense linear programs.

The solver is a two-phase tableau simplex (Dantzig pricing with a fallback to
Bland's rule after a run of degenerate pivots, which guarantees termination).
Problems here have at most a few hundred variables, so a dense tableau is
both the simplest and the most robust choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10

_SENSES = {"<=": -1, "=": 0, "==": 0, ">=": 1}


class LpError(RuntimeError):
    pass


class IterationLimit(LpError):
    pass


@dataclass
class LinearProgram:
    """``min`` (or ``max``) of ``c @ x`` subject to row constraints and bounds.

    ``senses`` holds one of ``"<="``, ``"="``, ``">="`` per row of ``A``.
    Bounds default to ``0 <= x < inf``.
    """

    c: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    b: np.ndarray
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.senses = list(self.senses)
        if self.A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise ValueError("constraint matrix, senses and rhs disagree in length")
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise ValueError(f"unknown constraint sense {bad[0]!r}")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, float).ravel()
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bounds must have one entry per variable")
        for arr in (self.c, self.A, self.b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: str
    value: float
    x: np.ndarray = field(repr=False)
    iterations: int = 0
    max_violation: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class _StandardForm:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    slack_col: np.ndarray
    # x = offset + T @ z for the standard-form variables z
    T: np.ndarray
    offset: np.ndarray
    row_sign: np.ndarray
    const: float


def _standard_form(lp: LinearProgram) -> _StandardForm:
    n = lp.n_vars
    cols = []  # (orig var, coefficient) per standard column
    offset = np.zeros(n)
    extra_rows = []  # (standard column, bound) for finite two-sided bounds
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    T = np.zeros((n, nz))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s

    A_rows = [lp.A @ T]
    b = lp.b - lp.A @ offset
    senses = [_SENSES[s] for s in lp.senses]
    if extra_rows:
        E = np.zeros((len(extra_rows), nz))
        for r, (k, bound) in enumerate(extra_rows):
            E[r, k] = 1.0
        A_rows.append(E)
        b = np.concatenate([b, [bound for _, bound in extra_rows]])
        senses += [-1] * len(extra_rows)
    A = np.vstack(A_rows) if A_rows else np.zeros((0, nz))
    senses = np.array(senses, dtype=np.int64)

    # flip rows so the right-hand side is nonnegative
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    senses = senses * sign.astype(np.int64)

    m = A.shape[0]
    n_slack = int(np.sum(senses != 0))
    A_full = np.zeros((m, nz + n_slack))
    A_full[:, :nz] = A
    slack_col = np.full(m, -1, dtype=np.int64)
    k = nz
    for i in range(m):
        if senses[i] == -1:
            A_full[i, k] = 1.0
            slack_col[i] = k
            k += 1
        elif senses[i] == 1:
            A_full[i, k] = -1.0
            k += 1
    c_std = np.zeros(nz + n_slack)
    sgn = -1.0 if lp.maximize else 1.0
    c_std[:nz] = sgn * (lp.c @ T)
    T_full = np.zeros((n, nz + n_slack))
    T_full[:, :nz] = T
    return _StandardForm(A_full, b, c_std, slack_col, T_full, offset, sign, float(lp.c @ offset))


def _violation(lp: LinearProgram, x: np.ndarray) -> float:
    r = lp.A @ x - lp.b
    v = 0.0
    for s, ri in zip(lp.senses, r):
        if s == "<=":
            v = max(v, ri)
        elif s == ">=":
            v = max(v, -ri)
        else:
            v = max(v, abs(ri))
    v = max(v, float(np.max(lp.lb - x, initial=0.0)), float(np.max(x - lp.ub, initial=0.0)))
    return v


_STATUS = {
    kernels.LP_OPTIMAL: "optimal",
    kernels.LP_UNBOUNDED: "unbounded",
    kernels.LP_INFEASIBLE: "infeasible",
    kernels.LP_ITERATION_LIMIT: "iteration_limit",
}


def solve(lp: LinearProgram, max_iter: int = 50_000) -> LpSolution:
    """Solve ``lp``; infeasible and unbounded problems are reported by status.

    Raises :class:`IterationLimit` instead of returning a possibly wrong
    answer when the pivot budget runs out.
    """
    sf = _standard_form(lp)
    if sf.A.shape[0] == 0:
        # only bounds: each variable sits at its best finite bound
        sgn = -1.0 if lp.maximize else 1.0
        x = np.where(sgn * lp.c >= 0, lp.lb, lp.ub)
        if not np.all(np.isfinite(x)):
            return LpSolution("unbounded", np.nan, x)
        return LpSolution("optimal", float(lp.c @ x), x)
    st, z, val, iters = kernels.simplex_std(
        sf.A, sf.b, sf.c, sf.slack_col, PIVOT_TOL, FEAS_TOL, max_iter
    )
    status = _STATUS[int(st)]
    if status == "iteration_limit":
        raise IterationLimit(f"simplex exceeded {max_iter} pivots")
    x = sf.offset + sf.T @ z
    if status != "optimal":
        return LpSolution(status, np.nan, x, int(iters))
    viol = _violation(lp, x)
    scale = 1.0 + float(np.abs(lp.b).max(initial=0.0))
    if viol > 1e-7 * scale:
        raise LpError(f"simplex returned a point violating constraints by {viol:.3g}")
    return LpSolution("optimal", float(lp.c @ x), x, int(iters), viol)


class L1Projector:
    """Batch evaluator of ``min_{p in S} ||p - q||_1`` for a fixed convex set.

    ``S = {M z : G z (senses) h, z >= 0}``. The LP uses slack pairs
    ``M z - q = u - v`` and minimizes ``sum(u + v)``; its standard form is
    built once and only the right-hand side changes from query to query.
    """

    def __init__(self, M, G, senses, h):
        M = np.asarray(M, dtype=np.float64)
        G = np.asarray(G, dtype=np.float64).reshape(-1, M.shape[1])
        nx, nz = M.shape
        self.n = nx
        c = np.concatenate([np.zeros(nz), np.ones(2 * nx)])
        A_q = np.hstack([M, -np.eye(nx), np.eye(nx)])
        A_g = np.hstack([G, np.zeros((G.shape[0], 2 * nx))])
        lp = LinearProgram(
            c,
            np.vstack([A_q, A_g]),
            ["="] * nx + list(senses),
            np.concatenate([np.zeros(nx), np.asarray(h, float).ravel()]),
        )
        sf = _standard_form(lp)
        if np.any(sf.row_sign[:nx] < 0):  # pragma: no cover - rhs rows are zero here
            raise LpError("unexpected sign flip on projection rows")
        self._sf = sf
        self._nz = nz
        self._M = M
        self._q_rows = np.arange(nx, dtype=np.int64)

    def distances(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.n:
            raise ValueError("query dimension does not match the set")
        if np.any(Q < 0):
            raise ValueError("queries must be nonnegative vectors")
        sf = self._sf
        status, vals = kernels.l1_batch(
            sf.A, sf.b, sf.c, sf.slack_col, self._q_rows, Q, PIVOT_TOL, FEAS_TOL, 50_000
        )
        if np.any(status == kernels.LP_INFEASIBLE):
            raise LpError("set is empty (infeasible parameterization)")
        if np.any(status != kernels.LP_OPTIMAL):
            raise IterationLimit("projection LP did not reach optimality")
        return np.maximum(vals, 0.0)

    def project(self, q):
        """Return ``(distance, nearest point)`` for a single query."""
        q = np.asarray(q, dtype=np.float64)
        sf = self._sf
        b = sf.b.copy()
        b[self._q_rows] = q
        st, z, val, _ = kernels.simplex_std(
            sf.A, b, sf.c, sf.slack_col, PIVOT_TOL, FEAS_TOL, 50_000
        )
        if st == kernels.LP_INFEASIBLE:
            raise LpError("set is empty (infeasible parameterization)")
        if st != kernels.LP_OPTIMAL:
            raise IterationLimit("projection LP did not reach optimality")
        x = sf.offset + sf.T @ z
        return max(float(val), 0.0), self._M @ x[: self._nz]


def l1_distance_to_set(q, fset) -> float:
    """L1 distance from ``q`` to a :class:`~avsrd.avs.FeasibleSet`."""
    return float(fset.distances(np.asarray(q, dtype=np.float64)[None, :])[0])
