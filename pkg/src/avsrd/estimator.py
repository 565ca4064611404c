"""Plug-in estimation of R(p, D) from IID samples."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import continuity as cont
from .prob import DistortionMatrix, as_pmf, d_min, empirical_type
from .rd import rate_distortion
from .sim import make_rng


def plugin_estimate(xs, d, D: float, tol: float = 1e-9) -> float:
    """``R(type(xs), D)``; ``inf`` when D is below the type's D_min."""
    d = DistortionMatrix.coerce(d)
    return rate_distortion(empirical_type(xs, d.n_src), d, D, tol).rate


@dataclass
class EstimationExperiment:
    p: np.ndarray
    d: DistortionMatrix
    D: float
    eps: float
    tau: float
    n_values: Sequence[int] = ()
    replicas: int = 1000
    seed: int = 0
    include_certified: bool = True

    def __post_init__(self):
        self.d = DistortionMatrix.coerce(self.d)
        self.p = as_pmf(self.p, size=self.d.n_src)
        if not 0.0 < self.eps < math.log(self.d.n_src):
            raise ValueError("accuracy must lie in (0, ln|X|)")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("confidence parameter must lie in (0, 1)")
        if self.replicas < 1:
            raise ValueError("need at least one replica")

    @property
    def context(self) -> cont.ContinuityContext:
        return cont.ContinuityContext.from_distortion(self.d)

    def certified_n(self) -> int:
        return cont.sufficient_sample_size(self.eps, self.tau, self.context)


@dataclass
class ValidationRow:
    n: int
    empirical_deviation_prob: float
    theoretical_bound: float
    deviations: int
    replicas: int


@dataclass
class ValidationReport:
    certified_n: Optional[int]
    true_rate: float
    tau: float
    eps: float
    seed: int
    rows: list = field(default_factory=list)

    def row_at(self, n: int) -> Optional[ValidationRow]:
        for r in self.rows:
            if r.n == n:
                return r
        return None

    @property
    def holds(self) -> bool:
        """Empirical failure rate at the certified n is at most tau."""
        if self.certified_n is None:
            return False
        r = self.row_at(self.certified_n)
        return r is not None and r.empirical_deviation_prob <= self.tau

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "empirical_deviation_prob", "theoretical_bound"])
        for r in self.rows:
            w.writerow([r.n, f"{r.empirical_deviation_prob:.12g}", f"{r.theoretical_bound:.12g}"])
        return buf.getvalue()


def _deviation_count(exp: EstimationExperiment, n: int, idx: int, true_rate: float) -> int:
    rng = make_rng(exp.seed, idx, 0)
    counts = rng.multinomial(n, exp.p, size=exp.replicas)
    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    dev = np.empty(len(uniq), dtype=bool)
    for i, c in enumerate(uniq):
        q = c / n
        if exp.D < d_min(q, exp.d) - 1e-12 * max(1.0, exp.d.dmax):
            dev[i] = True  # infeasible estimate counts as a deviation
            continue
        dev[i] = abs(rate_distortion(q, exp.d, exp.D).rate - true_rate) >= exp.eps
    return int(dev[np.asarray(inverse).ravel()].sum())


def validate_bound(exp: EstimationExperiment) -> ValidationReport:
    """Monte-Carlo deviation probability of the plug-in estimate at each n.

    The theoretical column needs a zero in every row of the distortion table;
    for other tables it is NaN and no certified n is added.
    """
    ctx = exp.context
    bounded = ctx.zero_in_every_row
    if exp.include_certified and not bounded:
        raise cont.OutOfRegime("the sample-size bound needs a zero in every row of the distortion table")
    n_cert = exp.certified_n() if exp.include_certified else None
    gv = cont.sample_size_g(exp.eps, ctx) if bounded else None
    true_rate = rate_distortion(exp.p, exp.d, exp.D).rate
    ns = sorted(set(int(n) for n in exp.n_values) | ({n_cert} if n_cert is not None else set()))
    if not ns:
        raise ValueError("no sample sizes to evaluate")
    if any(n < 1 for n in ns):
        raise ValueError("sample sizes must be positive")
    rep = ValidationReport(n_cert, true_rate, exp.tau, exp.eps, exp.seed)
    for idx, n in enumerate(ns):
        k = _deviation_count(exp, n, idx, true_rate)
        bound = min(1.0, cont.sample_tail(n, gv, ctx)) if bounded else math.nan
        rep.rows.append(ValidationRow(n, k / exp.replicas, bound, k, exp.replicas))
    return rep
