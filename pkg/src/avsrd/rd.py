"""Rate-distortion function of an IID source, R(p, D), in nats."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .prob import LN2, DistortionMatrix, as_pmf, binary_entropy, d_min

DEFAULT_TOL = 1e-9
MAX_OUTER = 300
MAX_INNER = 200_000


class InfeasibleDistortion(ValueError):
    """Raised where a finite rate is required but D < D_min(p)."""


class SolverNotConverged(RuntimeError):
    pass


@dataclass
class RdResult:
    """Outcome of one R(p, D) evaluation.

    ``rate`` is the mutual information of ``channel``, an explicit test
    channel meeting the distortion constraint, so it never undershoots the
    true value; ``lower`` is a dual certificate with ``rate - lower <= tol``.
    An infeasible level (D < D_min) gives ``rate = inf`` and no channel.
    """

    rate: float
    lower: float
    channel: np.ndarray = field(repr=False)
    distortion: float
    slope: float = 0.0
    iterations: int = 0
    output: np.ndarray = field(default=None, repr=False)

    @property
    def infinite(self) -> bool:
        return np.isinf(self.rate)


def _prep(p, d):
    d = DistortionMatrix.coerce(d)
    p = as_pmf(p, size=d.n_src)
    return p, d


def rate_distortion(p, d, D: float, tol: float = DEFAULT_TOL) -> RdResult:
    """R(p, D) via Blahut-Arimoto with slope bisection.

    Letters with ``p(x) = 0`` do not take part in the iteration; their rows of
    the returned channel are uniform.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    if not np.isfinite(D):
        raise ValueError("distortion level must be finite")
    p, d = _prep(p, d)
    st, rate, lower, W, dist, beta, iters = kernels.rd_point(
        np.ascontiguousarray(p), d.d, float(D), tol, MAX_OUTER, MAX_INNER
    )
    if st == kernels.RD_INFEASIBLE:
        return RdResult(np.inf, np.inf, np.full(d.shape, np.nan), float("nan"))
    if st != kernels.RD_OK:
        raise SolverNotConverged(
            f"rate bounds did not close: [{lower!r}, {rate!r}] at D={D!r}"
        )
    W = np.array(W)
    W[p == 0] = 1.0 / d.n_rec
    return RdResult(
        float(rate), float(lower), W, float(dist), float(beta), int(iters), p @ W
    )


def rate_distortion_batch(P, d, D: float, tol: float = 1e-8) -> np.ndarray:
    """R(q, D) for every row ``q`` of ``P``; infeasible rows give ``inf``."""
    d = DistortionMatrix.coerce(d)
    P = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    if P.shape[1] != d.n_src:
        raise ValueError("pmf and distortion dimensions differ")
    status, rates, _ = kernels.rd_batch(P, d.d, float(D), tol, MAX_OUTER, MAX_INNER)
    if np.any(status == kernels.RD_NOT_CONVERGED):
        bad = int(np.argmax(status == kernels.RD_NOT_CONVERGED))
        raise SolverNotConverged(f"rate bounds did not close for row {bad}")
    rates = np.where(status == kernels.RD_INFEASIBLE, np.inf, rates)
    return rates


def rate(p, d, D: float, tol: float = DEFAULT_TOL) -> float:
    return rate_distortion(p, d, D, tol).rate


def rate_distortion_shifted(p, d, D: float, tol: float = DEFAULT_TOL) -> float:
    """R_0(p, D - D_min(p)) computed against the row-min shifted table.

    Agrees with :func:`rate_distortion` on the original table; the kernel
    itself works in the shifted coordinates, so this mainly serves as an
    explicit route for cross-checks.
    """
    p, d = _prep(p, d)
    dm = d_min(p, d)
    if D < dm - 1e-12 * max(1.0, d.dmax):
        raise InfeasibleDistortion(f"D={D!r} is below D_min(p)={dm!r}")
    shifted = DistortionMatrix(d.shifted)
    return rate_distortion(p, shifted, max(D - dm, 0.0), tol).rate


def binary_hamming_rd(p1: float, D: float, bits: bool = True) -> float:
    """Closed form h_b(p1) - h_b(D) for D <= p1 <= 1/2, zero beyond."""
    if not 0.0 <= p1 <= 0.5:
        raise ValueError("p1 must lie in [0, 1/2]; fold the symmetry first")
    if D < 0:
        raise ValueError("distortion level must be nonnegative")
    if D >= p1:
        return 0.0
    return binary_entropy(p1, bits) - binary_entropy(D, bits)


def to_bits(nats: float) -> float:
    return nats / LN2
