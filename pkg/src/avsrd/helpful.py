"""Helpful switcher: reduction to an IID meta-source over candidate sets.

With full lookahead the encoder and switcher cooperate, so at each time the
reproduction only has to be close to the best symbol on offer. The source
becomes IID over candidate sets ``V`` with law ``beta`` and distortion
``rho(V, xhat) = min_{x in V} d(x, xhat)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .approx import ApproxResult, GridSpec, approx_extremum
from .avs import StateModel, SubsourceEnsemble, build_set, canonical_subsets, mask_members
from .prob import DistortionMatrix, d_min
from .rd import InfeasibleDistortion, rate_distortion


@dataclass(frozen=True, eq=False)
class MetaSource:
    """IID source over candidate sets (canonical order: size, then lexicographic)."""

    n: int
    masks: tuple
    beta: np.ndarray = field(repr=False)
    rho: DistortionMatrix = field(repr=False)

    @property
    def sets(self) -> list:
        return [mask_members(mk, self.n) for mk in self.masks]

    def index_of(self, V) -> int:
        from .avs import to_mask

        return self.masks.index(to_mask(V))

    def rho_by_mask(self) -> np.ndarray:
        """``rho`` as a ``(2^n, |Xhat|)`` table indexed by bitmask (unused rows are 0)."""
        T = np.zeros((1 << self.n, self.rho.n_rec))
        T[list(self.masks)] = self.rho.d
        return T


def build_meta_source(ens: SubsourceEnsemble, d) -> MetaSource:
    d = DistortionMatrix.coerce(d)
    if d.n_src != ens.n:
        raise ValueError("distortion rows must match the source alphabet")
    masks = tuple(canonical_subsets(ens.n, ens.m))
    beta = np.array([ens.beta_table[mk] for mk in masks])
    beta = beta / beta.sum()
    rho = np.array([d.d[list(mask_members(mk, ens.n))].min(axis=0) for mk in masks])
    beta.setflags(write=False)
    return MetaSource(ens.n, masks, beta, DistortionMatrix(rho))


def helpful_full_lookahead_rd(meta: MetaSource, D: float, tol: float = 1e-9) -> float:
    """R*(beta, D) in nats."""
    dm = d_min(meta.beta, meta.rho)
    if D < dm - 1e-12 * max(1.0, meta.rho.dmax):
        raise InfeasibleDistortion(f"D={D!r} is below the meta-source minimum {dm!r}")
    return rate_distortion(meta.beta, meta.rho, D, tol).rate


@dataclass
class HelpfulBounds:
    """Bracket on the one-step-lookahead helpful rate (its exact value is open)."""

    D: float
    lower: float
    upper: float
    upper_detail: Optional[ApproxResult] = None

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def helpful_one_step_bounds(ens: SubsourceEnsemble, d, D: float, spec: GridSpec) -> HelpfulBounds:
    """``R*(beta, D) <= R(D) <= min over the cheating set of R(p, D)``."""
    lower = helpful_full_lookahead_rd(build_meta_source(ens, d), D)
    up = approx_extremum(build_set(ens, "cheating"), d, D, spec, sense="min")
    return HelpfulBounds(D, lower, up.value, up)


def helpful_states_upper_bound(model: StateModel, d, D: float, spec: GridSpec) -> ApproxResult:
    """Minimum of R(p, D) over the state-observation set."""
    return approx_extremum(build_set(model, "states"), d, D, spec, sense="min")
