"""Switcher models and the sets of IID laws they can emulate.

Subsets of the source alphabet are handled as bitmasks: symbol ``x`` is bit
``1 << x``.  The central tables are

* ``beta[mask]``  probability that the set of symbols offered by the
  subsources at one time step equals ``mask`` exactly;
* ``kappa[mask]`` probability that every subsource output lies in ``mask``,
  i.e. the subset sum of ``beta``.

``kappa`` is supermodular, so the polytope ``{p : p(V) >= kappa(V)}`` is the
core of a convex game; its vertices are the laws produced by "pick the
highest-ranked available symbol" rules (:func:`max_rule_distribution`).
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import lp as lpmod
from .prob import DistortionMatrix, as_pmf

MAX_HREP_ALPHABET = 16
MAX_JOINT_ENTRIES = 10**7
MAX_PARAMETRIC_VERTICES = 200_000
JSON_TOL = 1e-9


class ModelError(ValueError):
    """Inconsistent or oversized model description."""


class DecompositionError(RuntimeError):
    """No rule family reproduces the target (target lies outside the set)."""


# -- subsets ------------------------------------------------------------------


def to_mask(V) -> int:
    if isinstance(V, (int, np.integer)):
        return int(V)
    mask = 0
    for x in V:
        mask |= 1 << int(x)
    return mask


def mask_members(mask: int, n: int) -> tuple:
    return tuple(x for x in range(n) if mask >> x & 1)


def popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return np.array([bin(int(k)).count("1") for k in masks], dtype=np.int64)


def canonical_subsets(n: int, max_size: Optional[int] = None) -> list:
    """Nonempty subsets of ``range(n)`` as masks, by size then lexicographic."""
    max_size = n if max_size is None else min(n, max_size)
    out = []
    for k in range(1, max_size + 1):
        for combo in itertools.combinations(range(n), k):
            out.append(to_mask(combo))
    return out


def subset_sums(values: np.ndarray, n: int) -> np.ndarray:
    """Zeta transform: ``out[S] = sum_{T subset of S} values[T]``."""
    out = np.array(values, dtype=np.float64)
    idx = np.arange(1 << n)
    for b in range(n):
        hi = (idx >> b) & 1 == 1
        out[hi] += out[idx[hi] ^ (1 << b)]
    return out


def mobius(values: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`subset_sums`."""
    out = np.array(values, dtype=np.float64)
    idx = np.arange(1 << n)
    for b in range(n):
        hi = (idx >> b) & 1 == 1
        out[hi] -= out[idx[hi] ^ (1 << b)]
    return out


# -- subsource ensembles -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubsourceEnsemble:
    """``m`` subsources over a common alphabet of size ``n``.

    Exactly one of ``marginals`` (independent subsources, shape ``(m, n)``)
    or ``joint`` (tensor of shape ``(n,) * m``) defines the law.
    """

    n: int
    m: int
    marginals_: Optional[np.ndarray] = field(default=None, repr=False)
    joint: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ModelError("need at least one subsource and one symbol")
        if (self.marginals_ is None) == (self.joint is None):
            raise ModelError("give either independent marginals or a joint law")

    @classmethod
    def from_independent(cls, marginals, tol: float = 1e-12) -> "SubsourceEnsemble":
        rows = [as_pmf(r, tol=tol) for r in marginals]
        if not rows:
            raise ModelError("empty subsource list")
        n = rows[0].size
        if any(r.size != n for r in rows):
            raise ModelError("subsources must share one alphabet")
        P = np.vstack(rows)
        P.setflags(write=False)
        return cls(n, len(rows), marginals_=P)

    @classmethod
    def from_joint(cls, joint, n: int, m: int, tol: float = 1e-12) -> "SubsourceEnsemble":
        if n**m > MAX_JOINT_ENTRIES:
            raise ModelError(f"joint law with {n}^{m} entries exceeds the cap")
        flat = as_pmf(np.asarray(joint, dtype=np.float64).ravel(), size=n**m, tol=tol)
        J = flat.reshape((n,) * m).copy()
        J.setflags(write=False)
        return cls(n, m, joint=J)

    @property
    def independent(self) -> bool:
        return self.marginals_ is not None

    @cached_property
    def marginals(self) -> np.ndarray:
        if self.marginals_ is not None:
            return self.marginals_
        axes = range(self.m)
        P = np.vstack(
            [self.joint.sum(axis=tuple(a for a in axes if a != l)) for l in axes]
        )
        P.setflags(write=False)
        return P

    def joint_tensor(self) -> np.ndarray:
        if self.joint is not None:
            return self.joint
        if self.n**self.m > MAX_JOINT_ENTRIES:
            raise ModelError("joint tensor too large to materialize")
        J = np.ones(())
        for row in self.marginals_:
            J = np.multiply.outer(J, row)
        return J

    @cached_property
    def beta_table(self) -> np.ndarray:
        n, m = self.n, self.m
        if self.n**self.m <= MAX_JOINT_ENTRIES:
            J = self.joint_tensor()
            grids = np.indices(J.shape).reshape(m, -1)
            masks = np.bitwise_or.reduce(1 << grids, axis=0)
            b = np.bincount(masks, weights=J.ravel(), minlength=1 << n)
        else:
            if n > MAX_HREP_ALPHABET:
                raise ModelError("alphabet too large for subset enumeration")
            b = mobius(self.kappa_table, n)
            b[np.abs(b) < 1e-15] = 0.0
            b = np.clip(b, 0.0, None)
        b.setflags(write=False)
        return b

    @cached_property
    def kappa_table(self) -> np.ndarray:
        n = self.n
        if n > MAX_HREP_ALPHABET:
            raise ModelError(f"subset tables need |X| <= {MAX_HREP_ALPHABET}")
        if self.independent and self.n**self.m > MAX_JOINT_ENTRIES:
            k = np.ones(1 << n)
            for row in self.marginals_:
                k *= subset_sums(np.bincount(1 << np.arange(n), weights=row, minlength=1 << n), n)
        else:
            k = subset_sums(self.beta_table, n)
        k = np.minimum(k, 1.0)
        k[0] = 0.0
        k[-1] = 1.0
        k.setflags(write=False)
        return k

    def kappa(self, V) -> float:
        return float(self.kappa_table[to_mask(V)])

    def beta(self, V) -> float:
        mask = to_mask(V)
        size = bin(mask).count("1")
        if size == 0 or size > self.m:
            warnings.warn(
                "candidate sets are nonempty with at most m symbols; returning 0",
                stacklevel=2,
            )
            return 0.0
        return float(self.beta_table[mask])

    def sample_outputs(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """IID draws of the subsource vector, shape ``(size, m)``."""
        if self.independent:
            out = np.empty((size, self.m), dtype=np.int64)
            for l, row in enumerate(self.marginals_):
                out[:, l] = rng.choice(self.n, size=size, p=row)
            return out
        flat = rng.choice(self.n**self.m, size=size, p=self.joint.ravel())
        return np.stack(np.unravel_index(flat, self.joint.shape), axis=1).astype(np.int64)


# -- state models ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateModel:
    """Switcher observing a state ``t ~ alpha`` with ``x_l ~ cond[l, t]``."""

    alpha: np.ndarray
    cond: np.ndarray = field(repr=False)
    source: Optional[SubsourceEnsemble] = field(default=None, repr=False)

    def __post_init__(self):
        alpha = as_pmf(self.alpha)
        if np.any(alpha <= 0):
            raise ModelError("every state needs positive probability")
        cond = np.array(self.cond, dtype=np.float64)
        if cond.ndim != 3 or cond.shape[1] != alpha.size:
            raise ModelError("conditional table must have shape (m, |T|, |X|)")
        for l in range(cond.shape[0]):
            for t in range(cond.shape[1]):
                cond[l, t] = as_pmf(cond[l, t])
        cond.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "cond", cond)

    @property
    def m(self) -> int:
        return self.cond.shape[0]

    @property
    def n_states(self) -> int:
        return self.cond.shape[1]

    @property
    def n(self) -> int:
        return self.cond.shape[2]

    @cached_property
    def marginals(self) -> np.ndarray:
        return np.einsum("t,ltx->lx", self.alpha, self.cond)

    @classmethod
    def from_observation(cls, ens: SubsourceEnsemble, channel) -> "StateModel":
        """State produced by a channel acting on the whole subsource vector.

        ``channel`` maps a tuple ``(x_1, ..., x_m)`` to a probability vector
        over states (or to a single state index for a deterministic map).
        States that never occur are dropped.
        """
        J = ens.joint_tensor()
        rows = []
        for idx in itertools.product(range(ens.n), repeat=ens.m):
            c = channel(idx)
            rows.append(c)
        if all(isinstance(r, (int, np.integer)) for r in rows):
            T = max(rows) + 1
            C = np.zeros((len(rows), T))
            C[np.arange(len(rows)), rows] = 1.0
        else:
            C = np.array([np.asarray(r, dtype=np.float64) for r in rows])
        joint_t = J.reshape(-1)[:, None] * C  # P(x-vector, t)
        alpha = joint_t.sum(axis=0)
        keep = alpha > 1e-15
        joint_t, alpha = joint_t[:, keep], alpha[keep]
        grids = np.indices(J.shape).reshape(ens.m, -1)
        cond = np.zeros((ens.m, alpha.size, ens.n))
        for l in range(ens.m):
            for x in range(ens.n):
                cond[l, :, x] = joint_t[grids[l] == x].sum(axis=0) / alpha
        return cls(alpha / alpha.sum(), cond, source=ens)

    @classmethod
    def perfect_observation(cls, ens: SubsourceEnsemble) -> "StateModel":
        """The state is the full subsource vector."""
        n = ens.n
        return cls.from_observation(
            ens, lambda idx: int(np.ravel_multi_index(idx, (n,) * ens.m))
        )

    @classmethod
    def blind(cls, ens: SubsourceEnsemble) -> "StateModel":
        """A single state: the switcher learns nothing."""
        return cls(np.ones(1), ens.marginals[:, None, :], source=ens)


# -- feasible sets ---------------------------------------------------------------


class FeasibleSet:
    """Convex (or finite) set of distributions on ``n`` symbols.

    Non-finite sets are stored in lifted form ``{M z : G z (senses) h, z >= 0}``
    which every LP query shares.
    """

    def __init__(
        self,
        kind: str,
        n: int,
        *,
        points=None,
        M=None,
        G=None,
        senses=None,
        h=None,
        vertex_fn: Optional[Callable[[], np.ndarray]] = None,
        sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
        label: str = "",
    ):
        self.kind = kind
        self.n = n
        self.label = label
        self._vertex_fn = vertex_fn
        self._sampler = sampler
        if kind == "finite":
            P = np.atleast_2d(np.asarray(points, dtype=np.float64))
            if P.shape[0] == 0:
                raise ModelError("finite set needs at least one point")
            self.points = P
            self._proj = None
        else:
            self.M = np.asarray(M, dtype=np.float64)
            self.G = np.asarray(G, dtype=np.float64)
            self.senses = list(senses)
            self.h = np.asarray(h, dtype=np.float64)
            self._proj = lpmod.L1Projector(self.M, self.G, self.senses, self.h)

    # queries ----------------------------------------------------------------

    def distances(self, Q) -> np.ndarray:
        """L1 distance from each row of ``Q`` to the set."""
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.n:
            raise ValueError("query dimension does not match the set")
        if self.kind == "finite":
            return np.abs(Q[:, None, :] - self.points[None, :, :]).sum(axis=2).min(axis=1)
        return self._proj.distances(Q)

    def distance(self, q) -> float:
        return float(self.distances(q)[0])

    def project(self, q):
        """``(distance, nearest point of the set)``."""
        q = np.asarray(q, dtype=np.float64)
        if self.kind == "finite":
            dist = np.abs(self.points - q).sum(axis=1)
            i = int(np.argmin(dist))
            return float(dist[i]), self.points[i].copy()
        return self._proj.project(q)

    def contains(self, q, tol: float = lpmod.FEAS_TOL * 10) -> bool:
        return self.distance(q) <= tol

    def support(self, a, maximize: bool = True) -> float:
        """``max`` (or ``min``) of ``a @ p`` over the set."""
        a = np.asarray(a, dtype=np.float64)
        if self.kind == "finite":
            vals = self.points @ a
            return float(vals.max() if maximize else vals.min())
        prog = lpmod.LinearProgram(a @ self.M, self.G, self.senses, self.h, maximize=maximize)
        sol = lpmod.solve(prog)
        if not sol.optimal:
            raise lpmod.LpError(f"support query ended with status {sol.status}")
        return sol.value

    def max_dmin(self, d) -> float:
        """Largest D_min(p) over the set; D at or above it is feasible everywhere."""
        return self.support(DistortionMatrix.coerce(d).row_min, maximize=True)

    def min_dmin(self, d) -> float:
        return self.support(DistortionMatrix.coerce(d).row_min, maximize=False)

    def vertices(self) -> np.ndarray:
        """Finite point list whose convex hull is the set (may include extras)."""
        if self.kind in ("finite", "vertices"):
            return self.points_or_columns()
        if self._vertex_fn is None:
            raise NotImplementedError("no vertex generator attached to this set")
        return self._vertex_fn()

    def points_or_columns(self) -> np.ndarray:
        return self.points if self.kind == "finite" else self.M.T.copy()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Random points of the set (finite sets: random members)."""
        if self.kind == "finite":
            return self.points[rng.integers(0, len(self.points), size=size)]
        if self._sampler is not None:
            return self._sampler(rng, size)
        V = self.vertices()
        W = rng.dirichlet(np.ones(len(V)), size=size)
        return W @ V


def directed_hausdorff(A: FeasibleSet, B: FeasibleSet) -> float:
    """``max_{p in A} dist(p, B)``; the max of a convex function sits at a vertex."""
    return float(B.distances(A.vertices()).max())


def set_distance(A: FeasibleSet, B: FeasibleSet) -> float:
    """Symmetric Hausdorff distance in L1."""
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))


# -- set builders -----------------------------------------------------------------


def hull_set(points, label: str = "conv") -> FeasibleSet:
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k, n = P.shape
    return FeasibleSet(
        "vertices", n, M=P.T, G=np.ones((1, k)), senses=["="], h=[1.0], label=label
    )


def core_set(ens: SubsourceEnsemble) -> FeasibleSet:
    """``{p : sum_{x in V} p(x) >= kappa(V) for every nonempty V}``."""
    n = ens.n
    if n > MAX_HREP_ALPHABET:
        raise ModelError(f"inequality description needs |X| <= {MAX_HREP_ALPHABET}")
    masks = np.arange(1, 1 << n)
    rows = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
    G = np.vstack([rows, np.ones((1, n))])
    h = np.concatenate([ens.kappa_table[masks], [1.0]])
    senses = [">="] * len(masks) + ["="]

    def verts():
        if n <= 7:
            orders = itertools.permutations(range(n))
            return np.unique(np.array([max_rule_distribution(ens, o) for o in orders]), axis=0)
        raise ModelError("vertex listing of the inequality set is limited to |X| <= 7")

    def sampler(rng, size):
        out = np.empty((size, n))
        for i in range(size):
            k = int(rng.integers(1, n + 2))
            V = np.array([max_rule_distribution(ens, rng.permutation(n)) for _ in range(k)])
            out[i] = rng.dirichlet(np.ones(k)) @ V
        return out

    return FeasibleSet(
        "halfspaces", n, M=np.eye(n), G=G, senses=senses, h=h,
        vertex_fn=verts, sampler=sampler, label="cheating",
    )


def state_set(model: StateModel) -> FeasibleSet:
    """Mixtures ``sum_t alpha(t) sum_l lam[l, t] p_l(.|t)`` with ``lam[., t]`` a pmf."""
    m, T, n = model.cond.shape
    # column (l, t) -> alpha(t) p_l(.|t); order t-major so per-state blocks are contiguous
    M = np.zeros((n, T * m))
    G = np.zeros((T, T * m))
    for t in range(T):
        for l in range(m):
            M[:, t * m + l] = model.alpha[t] * model.cond[l, t]
            G[t, t * m + l] = 1.0

    def verts():
        if m**T > MAX_PARAMETRIC_VERTICES:
            raise ModelError("too many state-wise vertex combinations to list")
        out = []
        for choice in itertools.product(range(m), repeat=T):
            out.append(sum(model.alpha[t] * model.cond[l, t] for t, l in enumerate(choice)))
        return np.unique(np.array(out), axis=0)

    def sampler(rng, size):
        lam = rng.dirichlet(np.ones(m), size=(size, T))  # (size, T, m)
        return np.einsum("stl,t,ltx->sx", lam, model.alpha, model.cond)

    return FeasibleSet(
        "parametric", n, M=M, G=G, senses=["="] * T, h=np.ones(T),
        vertex_fn=verts, sampler=sampler, label="states",
    )


REGIMES = ("compound", "strictly_causal", "cheating", "states")


def build_set(model, regime: str) -> FeasibleSet:
    """Attainable-distribution set of ``model`` under a switcher ``regime``."""
    if regime not in REGIMES:
        raise ModelError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if regime == "states":
        if not isinstance(model, StateModel):
            raise ModelError("the states regime needs a StateModel")
        return state_set(model)
    if isinstance(model, StateModel):
        if regime in ("compound", "strictly_causal"):
            marg = model.marginals
        elif model.source is not None:
            model = model.source
        else:
            raise ModelError("cheating regime needs the underlying subsource law")
    if isinstance(model, SubsourceEnsemble):
        marg = model.marginals
    if regime == "compound":
        return FeasibleSet("finite", marg.shape[1], points=marg, label="compound")
    if regime == "strictly_causal":
        return hull_set(marg, label="strictly_causal")
    return core_set(model)


# -- rules -------------------------------------------------------------------------


def max_rule_distribution(ens: SubsourceEnsemble, order: Sequence[int]) -> np.ndarray:
    """Law of the symbol chosen by "take the last symbol of ``order`` on offer".

    ``order`` lists symbols from lowest to highest rank; the i-th symbol gets
    ``kappa(first i) - kappa(first i-1)``.
    """
    order = [int(x) for x in order]
    if sorted(order) != list(range(ens.n)):
        raise ValueError("order must be a permutation of the alphabet")
    q = np.zeros(ens.n)
    prev, mask = 0.0, 0
    for x in order:
        mask |= 1 << x
        k = ens.kappa_table[mask]
        q[x] = k - prev
        prev = k
    return np.clip(q, 0.0, None)


@dataclass
class RuleFamily:
    """Choice laws ``f(.|V)`` indexed by candidate-set bitmask.

    ``table[mask]`` is a pmf supported on ``mask``; rows for sets that never
    occur hold a max-rule placeholder so sampling never meets an empty row.
    """

    n: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.float64)
        if self.table.shape != (1 << self.n, self.n):
            raise ModelError("rule table must have shape (2^n, n)")
        for mask in range(1, 1 << self.n):
            row = self.table[mask]
            off = [x for x in range(self.n) if not mask >> x & 1]
            if np.any(row < -1e-12) or abs(row.sum() - 1) > 1e-9 or np.any(np.abs(row[off]) > 1e-12):
                raise ModelError(f"rule for candidate set {mask:#b} is not a pmf on that set")

    @classmethod
    def max_rule(cls, n: int, order: Sequence[int]) -> "RuleFamily":
        rank = {int(x): i for i, x in enumerate(order)}
        T = np.zeros((1 << n, n))
        for mask in range(1, 1 << n):
            best = max(mask_members(mask, n), key=rank.__getitem__)
            T[mask, best] = 1.0
        return cls(n, T)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "RuleFamily":
        T = np.zeros((1 << n, n))
        for mask in range(1, 1 << n):
            mem = list(mask_members(mask, n))
            T[mask, mem] = rng.dirichlet(np.ones(len(mem)))
        return cls(n, T)

    def rule(self, V) -> np.ndarray:
        return self.table[to_mask(V)].copy()

    def induced(self, ens: SubsourceEnsemble) -> np.ndarray:
        """``sum_V beta(V) f(.|V)``."""
        return ens.beta_table @ self.table

    def cumulative(self) -> np.ndarray:
        """Row-wise cumulative table for inverse-CDF sampling.

        The last supported entry of every row is forced to 2 so round-off can
        never send a uniform draw past the support.
        """
        C = np.cumsum(self.table, axis=1)
        C[0] = 2.0
        for mask in range(1, 1 << self.n):
            top = mask.bit_length() - 1
            C[mask, top:] = 2.0
        return C


def decompose_into_rules(target, ens: SubsourceEnsemble, tol: float = 1e-8) -> RuleFamily:
    """Find rules ``f(.|V)`` with ``sum_V beta(V) f(.|V) = target``.

    Solved as an L1-fit LP; a residual above ``tol`` means the target is not
    attainable by one-step rules.
    """
    n = ens.n
    target = as_pmf(target, size=n, tol=1e-9)
    beta = ens.beta_table
    live = [mask for mask in range(1, 1 << n) if beta[mask] > 0]
    var = [(mask, x) for mask in live for x in mask_members(mask, n)]
    nv = len(var)
    # variables: f (nv), u (n), v (n)
    A_fit = np.zeros((n, nv + 2 * n))
    for j, (mask, x) in enumerate(var):
        A_fit[x, j] = beta[mask]
    A_fit[:, nv : nv + n] = -np.eye(n)
    A_fit[:, nv + n :] = np.eye(n)
    A_row = np.zeros((len(live), nv + 2 * n))
    for j, (mask, _) in enumerate(var):
        A_row[live.index(mask), j] = 1.0
    c = np.concatenate([np.zeros(nv), np.ones(2 * n)])
    prog = lpmod.LinearProgram(
        c, np.vstack([A_fit, A_row]), ["="] * (n + len(live)),
        np.concatenate([target, np.ones(len(live))]),
    )
    sol = lpmod.solve(prog)
    if not sol.optimal:
        raise DecompositionError(f"rule LP ended with status {sol.status}")
    placeholder = RuleFamily.max_rule(n, range(n)).table
    T = placeholder.copy()
    for mask in live:
        T[mask] = 0.0
    for j, (mask, x) in enumerate(var):
        T[mask, x] = max(sol.x[j], 0.0)
    for mask in live:
        T[mask] /= T[mask].sum()
    fam = RuleFamily(n, T)
    err = float(np.abs(fam.induced(ens) - target).sum())
    if err > tol:
        raise DecompositionError(
            f"target is {err:.3g} (L1) away from every rule-induced law"
        )
    return fam


# -- JSON model files ----------------------------------------------------------------


def _pmf_rows(rows, where: str):
    try:
        return [as_pmf(r, tol=JSON_TOL) for r in rows]
    except ValueError as exc:
        raise ModelError(f"{where}: {exc}") from None


def model_from_dict(desc: dict):
    """Parse a model description.

    Schema::

        {"alphabet_size": n, "m": m,
         "law": {"independent": [[...], ...]}
              | {"joint": [flattened row-major tensor over (x_1..x_m)]}
              | {"state": {"alpha": [...], "cond": [[pmf per state] per subsource]}}}
    """
    if not isinstance(desc, dict):
        raise ModelError("model description must be a JSON object")
    try:
        n = int(desc["alphabet_size"])
        m = int(desc["m"])
        law = desc["law"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"missing or malformed field: {exc}") from None
    if n < 1 or m < 1:
        raise ModelError("alphabet_size and m must be positive")
    if not isinstance(law, dict) or len(law) != 1:
        raise ModelError("law must have exactly one of independent, joint, state")
    (kind, body), = law.items()
    if kind == "independent":
        rows = _pmf_rows(body, "independent")
        if len(rows) != m or any(r.size != n for r in rows):
            raise ModelError("independent law needs m vectors of length alphabet_size")
        return SubsourceEnsemble.from_independent(rows)
    if kind == "joint":
        flat = np.asarray(body, dtype=np.float64).ravel()
        if flat.size != n**m:
            raise ModelError("joint law needs alphabet_size**m entries")
        (flat,) = _pmf_rows([flat], "joint")
        return SubsourceEnsemble.from_joint(flat, n, m)
    if kind == "state":
        try:
            alpha = _pmf_rows([body["alpha"]], "alpha")[0]
            cond = [_pmf_rows(rows, f"cond[{l}]") for l, rows in enumerate(body["cond"])]
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed state law: {exc}") from None
        C = np.array(cond, dtype=np.float64)
        if C.shape != (m, alpha.size, n):
            raise ModelError("cond must be indexed [subsource][state] with pmfs of length alphabet_size")
        return StateModel(alpha, C)
    raise ModelError(f"unknown law kind {kind!r}")


def model_to_dict(model) -> dict:
    if isinstance(model, StateModel):
        return {
            "alphabet_size": model.n,
            "m": model.m,
            "law": {"state": {"alpha": model.alpha.tolist(), "cond": model.cond.tolist()}},
        }
    if model.independent:
        law = {"independent": model.marginals.tolist()}
    else:
        law = {"joint": model.joint.ravel().tolist()}
    return {"alphabet_size": model.n, "m": model.m, "law": law}


def load_model(path):
    try:
        with open(path) as fh:
            desc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from None
    return model_from_dict(desc)


def dump_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
