"""Explicit uniform-continuity bounds for R(p, D) and what follows from them.

With ``f(g) = g ln(|X||Xhat| / g)`` on ``[0, 1/2]`` and its inverse ``g``:

* ``|R(p,D) - R(q,D)| <= (7 d*/d~) f(||p-q||_1)`` when every row of ``d``
  has a zero and ``||p-q||_1 <= d~/(4 d*)``;
* the same with ``11 d*/d~0`` for general ``d`` (shifted statistics),
  for ``||p-q||_1 <= d~0/(4 d*)`` and D above both D_min values.

All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .prob import DistortionMatrix

G_MAX_ITER = 200


class OutOfRegime(ValueError):
    """Argument outside the range where a bound is proven."""


class DegenerateDistortion(ValueError):
    """Distortion statistics needed by a bound are undefined."""


@dataclass(frozen=True)
class ContinuityContext:
    n_src: int
    n_rec: int
    dmax: float
    dtilde: Optional[float]
    dtilde0: Optional[float]
    d0max: float
    zero_in_every_row: bool

    @classmethod
    def from_distortion(cls, d) -> "ContinuityContext":
        d = DistortionMatrix.coerce(d)
        return cls(
            d.n_src,
            d.n_rec,
            d.dmax,
            d.dmin_nonzero,
            d.shifted_min_nonzero,
            d.shifted_max,
            d.zero_in_every_row,
        )

    @property
    def size_product(self) -> int:
        return self.n_src * self.n_rec

    def _need(self, value, what):
        if value is None:
            raise DegenerateDistortion(f"{what} is undefined for an all-zero table")
        return value


def f(gamma: float, ctx: ContinuityContext) -> float:
    if not 0.0 <= gamma <= 0.5:
        raise OutOfRegime("f is defined on [0, 1/2]")
    if ctx.size_product < 2:
        raise DegenerateDistortion("f needs |X||Xhat| >= 2 to be monotone")
    if gamma == 0.0:
        return 0.0
    return gamma * (math.log(ctx.size_product) - math.log(gamma))


def f_max(ctx: ContinuityContext) -> float:
    return f(0.5, ctx)


def g(y: float, ctx: ContinuityContext) -> float:
    """Inverse of :func:`f` by bisection."""
    top = f_max(ctx)
    if not 0.0 <= y <= top:
        raise OutOfRegime(f"g is defined on [0, {top!r}]")
    if y == 0.0:
        return 0.0
    if y == top:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(G_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid, ctx) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _plog(l1: float, ctx: ContinuityContext) -> float:
    return 0.0 if l1 == 0.0 else l1 * (math.log(ctx.size_product) - math.log(l1))


def lemma2_bound(l1: float, ctx: ContinuityContext) -> float:
    """Continuity bound for tables with a zero in every row."""
    if not ctx.zero_in_every_row:
        raise OutOfRegime("bound needs a zero in every row of the distortion table")
    dt = ctx._need(ctx.dtilde, "d~")
    limit = dt / (4.0 * ctx.dmax)
    if not 0.0 <= l1 <= limit:
        raise OutOfRegime(f"L1 distance must lie in [0, {limit!r}]")
    return 7.0 * ctx.dmax / dt * _plog(l1, ctx)


def lemma3_bound(l1: float, ctx: ContinuityContext) -> float:
    """Continuity bound for general tables, in terms of the shifted statistics."""
    dt0 = ctx._need(ctx.dtilde0, "d~0")
    limit = dt0 / (4.0 * ctx.dmax)
    if not 0.0 <= l1 <= limit:
        raise OutOfRegime(f"L1 distance must lie in [0, {limit!r}]")
    return 11.0 * ctx.dmax / dt0 * _plog(l1, ctx)


def distortion_continuity(D: float, ctx: ContinuityContext) -> float:
    """Bound on ``R(p, 0) - R(p, D)`` for tables with a zero in every row."""
    if not ctx.zero_in_every_row:
        raise OutOfRegime("bound needs a zero in every row of the distortion table")
    dt = ctx._need(ctx.dtilde, "d~")
    if not 0.0 <= D <= dt / 4.0:
        raise OutOfRegime(f"D must lie in [0, {dt / 4.0!r}]")
    if D == 0.0:
        return 0.0
    return 4.0 * D / dt * math.log(dt * ctx.size_product / (2.0 * D))


def _grid_coeff(ctx: ContinuityContext) -> float:
    return 11.0 * ctx.dmax / ctx._need(ctx.dtilde0, "d~0")


def max_certifiable_eps(ctx: ContinuityContext) -> float:
    """Largest accuracy for which the grid resolution is defined.

    Two limits apply: the argument of ``g`` must stay within ``f([0, 1/2])``
    and the rounding radius ``2|X|gamma`` must stay in the lemma's regime.
    """
    radius = min(0.5, ctx._need(ctx.dtilde0, "d~0") / (4.0 * ctx.dmax))
    return _grid_coeff(ctx) * f(radius, ctx)


def certified_gamma(eps: float, ctx: ContinuityContext) -> float:
    """Largest lattice step whose grid answer is within ``eps`` (nats)."""
    if not eps > 0:
        raise OutOfRegime("accuracy must be positive")
    top = max_certifiable_eps(ctx)
    if eps > top:
        raise OutOfRegime(f"accuracy {eps!r} exceeds the largest certifiable value {top!r}")
    return g(eps / _grid_coeff(ctx), ctx) / (2.0 * ctx.n_src)


def grid_eps(gamma: float, ctx: ContinuityContext) -> float:
    """Accuracy implied by an arbitrary lattice step (inverse of certified_gamma)."""
    radius = 2.0 * ctx.n_src * gamma
    dt0 = ctx._need(ctx.dtilde0, "d~0")
    if radius > min(0.5, dt0 / (4.0 * ctx.dmax)):
        return math.inf
    return _grid_coeff(ctx) * f(radius, ctx)


def grid_count_bound(eps: float, ctx: ContinuityContext) -> float:
    """Upper bound on the number of grid points; ``inf`` on overflow."""
    gv = 2.0 * ctx.n_src * certified_gamma(eps, ctx)
    if gv == 0.0:
        return math.inf
    try:
        return (2.0 * ctx.n_src / gv + 2.0) ** (ctx.n_src - 1)
    except OverflowError:
        return math.inf


def sufficient_sample_size(eps: float, tau: float, ctx: ContinuityContext) -> int:
    """Samples after which the plug-in estimate is within ``eps`` w.p. ``1 - tau``."""
    if not 0.0 < tau < 1.0:
        raise OutOfRegime("confidence parameter must lie in (0, 1)")
    if not 0.0 < eps < math.log(ctx.n_src):
        raise OutOfRegime("accuracy must lie in (0, ln|X|)")
    if not ctx.zero_in_every_row:
        raise OutOfRegime("bound needs a zero in every row of the distortion table")
    gv = sample_size_g(eps, ctx)
    bound = 2.0 / gv**2 * (math.log(1.0 / tau) + ctx.n_src * math.log(2.0))
    n = math.floor(bound) + 1
    while not sample_tail(n, gv, ctx) <= tau:  # guard against round-off in the floor
        n += 1
    return n


def sample_tail(n: int, gv: float, ctx: ContinuityContext) -> float:
    """``2^|X| exp(-(n/2) g^2)``: the type-deviation tail used for the sample size."""
    return 2.0**ctx.n_src * math.exp(-0.5 * n * gv * gv)


def sample_size_g(eps: float, ctx: ContinuityContext) -> float:
    """``g(eps d~ / (7 d*))``, the type radius behind the sample size."""
    return g(eps * ctx._need(ctx.dtilde, "d~") / (7.0 * ctx.dmax), ctx)


def type_concentration_bound(n: int, delta: float, n_src: int) -> float:
    """``exp(-n (2 delta^2 - |X| ln(n+1)/n))``, capped at 1."""
    expo = -n * (2.0 * delta * delta - n_src * math.log(n + 1) / n)
    return 1.0 if expo >= 0 else math.exp(expo)
