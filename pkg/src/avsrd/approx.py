"""Grid search for the extremum of R(p, D) over a set of distributions.

Lattice points ``q`` with spacing ``gamma`` are kept when they lie within
``2|X|gamma`` (L1) of the set; the extremum of ``R(q, D)`` over the kept
points is returned.  With ``gamma`` from :func:`~avsrd.continuity.certified_gamma`
the answer is within ``eps`` of the true maximum over the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import continuity as cont
from .avs import FeasibleSet, build_set
from .prob import LN2, DistortionMatrix
from .rd import rate_distortion_batch

DEFAULT_MAX_POINTS = 5_000_000
FILTER_SLACK = 1e-12
SOLVER_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int):
        super().__init__(f"grid has {count} points, above the budget of {budget}")
        self.count = count
        self.budget = budget


class EmptyGrid(RuntimeError):
    """No lattice point passed the distance filter."""


def grid_size(n: int, gamma: float) -> int:
    K = math.floor(1.0 / gamma + 1e-12)
    return math.comb(K + n - 1, n - 1)


@dataclass(frozen=True)
class GridSpec:
    """Lattice step plus how it was chosen.

    ``mode`` is ``"certified"`` (``eps`` in nats drove ``gamma``) or
    ``"budget"`` (``gamma`` given directly).
    """

    gamma: float
    mode: str = "budget"
    eps: Optional[float] = None
    max_points: int = DEFAULT_MAX_POINTS
    solver_tol: float = SOLVER_TOL

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("lattice step must lie in (0, 1)")
        if self.mode not in ("certified", "budget"):
            raise ValueError("mode must be 'certified' or 'budget'")
        if self.mode == "certified" and self.eps is None:
            raise ValueError("certified mode needs its accuracy")

    @classmethod
    def certified(cls, eps: float, d, **kw) -> "GridSpec":
        ctx = cont.ContinuityContext.from_distortion(d)
        return cls(cont.certified_gamma(eps, ctx), "certified", eps, **kw)

    @classmethod
    def budget(cls, gamma: float, **kw) -> "GridSpec":
        return cls(gamma, "budget", None, **kw)

    def point_count(self, n: int) -> int:
        return grid_size(n, self.gamma)

    def accuracy(self, d) -> tuple:
        """``(eps, heuristic)``: the guaranteed accuracy or the implied one."""
        if self.mode == "certified":
            return self.eps, False
        ctx = cont.ContinuityContext.from_distortion(d)
        return cont.grid_eps(self.gamma, ctx), True


def _compositions(dim: int, K: int) -> np.ndarray:
    """All ``k`` in N^dim with ``sum(k) <= K``, lexicographic order."""
    if dim == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if dim == 1:
        return np.arange(K + 1, dtype=np.int64)[:, None]
    blocks = []
    for first in range(K + 1):
        rest = _compositions(dim - 1, K - first)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def enumerate_grid(n: int, gamma: float, max_points: int = DEFAULT_MAX_POINTS) -> np.ndarray:
    """Lattice distributions ``(k_1 gamma, ..., k_{n-1} gamma, rest)``, lexicographic in k."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("lattice step must lie in (0, 1)")
    count = grid_size(n, gamma)
    if count > max_points:
        raise BudgetExceeded(count, max_points)
    K = math.floor(1.0 / gamma + 1e-12)
    k = _compositions(n - 1, K)
    Q = np.empty((len(k), n))
    Q[:, : n - 1] = k * gamma
    Q[:, n - 1] = np.clip(1.0 - Q[:, : n - 1].sum(axis=1), 0.0, None)
    return Q


@dataclass
class GridFilter:
    """Lattice points within ``2|X|gamma`` of a set; reusable across D values."""

    points: np.ndarray = field(repr=False)
    total: int
    radius: float

    @classmethod
    def build(cls, fset: FeasibleSet, spec: GridSpec) -> "GridFilter":
        Q = enumerate_grid(fset.n, spec.gamma, spec.max_points)
        radius = 2.0 * fset.n * spec.gamma
        # cheap prefilter: the L1 distance is at least the per-coordinate gap to
        # the set's coordinate ranges
        lo = np.array([fset.support(e, maximize=False) for e in np.eye(fset.n)])
        hi = np.array([fset.support(e, maximize=True) for e in np.eye(fset.n)])
        gap = np.maximum(lo - Q, 0.0) + np.maximum(Q - hi, 0.0)
        cand = np.flatnonzero(gap.max(axis=1) <= radius + FILTER_SLACK)
        dist = fset.distances(Q[cand]) if len(cand) else np.zeros(0)
        keep = cand[dist <= radius + FILTER_SLACK]
        return cls(Q[keep], len(Q), radius)


@dataclass
class ApproxResult:
    D: float
    value: float
    arg: Optional[np.ndarray]
    certified_eps: Optional[float]
    heuristic: bool
    evaluated: int
    skipped: int
    sense: str = "max"

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def _exact_finite(fset, d, D, sense, tol) -> ApproxResult:
    rates = rate_distortion_batch(fset.points, d, D, tol)
    i = int(np.argmax(rates) if sense == "max" else np.argmin(rates))
    return ApproxResult(D, float(rates[i]), fset.points[i].copy(), 0.0, False, len(rates), 0, sense)


def approx_extremum(
    fset: FeasibleSet,
    d,
    D: float,
    spec: GridSpec,
    sense: str = "max",
    grid: Optional[GridFilter] = None,
) -> ApproxResult:
    """Extremum of ``R(q, D)`` over the set, evaluated on the filtered lattice.

    Finite sets are handled exactly by evaluating every member.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    d = DistortionMatrix.coerce(d)
    if fset.kind == "finite":
        return _exact_finite(fset, d, D, sense, spec.solver_tol)
    eps, heuristic = spec.accuracy(d)
    slack = 1e-12 * max(1.0, d.dmax)
    if sense == "max" and D < fset.max_dmin(d) - slack:
        return ApproxResult(D, math.inf, None, eps, heuristic, 0, 0, sense)
    if sense == "min" and D < fset.min_dmin(d) - slack:
        return ApproxResult(D, math.inf, None, eps, heuristic, 0, 0, sense)
    grid = GridFilter.build(fset, spec) if grid is None else grid
    if len(grid.points) == 0:
        raise EmptyGrid("no lattice point within the filter radius; refine the step")
    Q = grid.points
    # lattice points just outside the set can have D_min above D; their rate is
    # infinite and outside the continuity lemma's regime, so they are skipped
    ok = Q @ d.row_min <= D + slack
    Q = Q[ok]
    skipped = int((~ok).sum())
    if len(Q) == 0:
        raise EmptyGrid("every retained lattice point is infeasible at this D")
    rates = rate_distortion_batch(Q, d, D, spec.solver_tol)
    i = int(np.argmax(rates) if sense == "max" else np.argmin(rates))
    return ApproxResult(D, float(rates[i]), Q[i].copy(), eps, heuristic, len(Q), skipped, sense)


@dataclass
class RdCurve:
    regime: str
    sense: str
    units: str = "nats"
    results: list = field(default_factory=list)

    @property
    def D(self) -> np.ndarray:
        return np.array([r.D for r in self.results])

    @property
    def R(self) -> np.ndarray:
        return np.array([r.value for r in self.results])

    def in_units(self, units: str) -> "RdCurve":
        """Copy with rates and accuracies expressed in ``units``."""
        if units not in ("bits", "nats"):
            raise ValueError("units must be 'bits' or 'nats'")
        if units == self.units:
            return self
        scale = 1.0 / LN2 if units == "bits" else LN2
        out = []
        for r in self.results:
            out.append(
                ApproxResult(
                    r.D, r.value * scale, r.arg,
                    None if r.certified_eps is None else r.certified_eps * scale,
                    r.heuristic, r.evaluated, r.skipped, r.sense,
                )
            )
        return RdCurve(self.regime, self.sense, units, out)


def rd_curve(
    model,
    regime: str,
    d,
    D_values: Sequence[float],
    spec: GridSpec,
    sense: str = "max",
) -> RdCurve:
    """Evaluate :func:`approx_extremum` over a list of distortion levels."""
    curve = RdCurve(regime, sense)
    D_values = list(D_values)
    if not D_values:
        return curve
    fset = model if isinstance(model, FeasibleSet) else build_set(model, regime)
    grid = None
    for D in D_values:
        if grid is None and fset.kind != "finite":
            grid = GridFilter.build(fset, spec)
        curve.results.append(approx_extremum(fset, d, float(D), spec, sense, grid))
    return curve
