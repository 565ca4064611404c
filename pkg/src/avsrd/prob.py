"""Finite-alphabet probability primitives.

Distributions are plain read-only float64 numpy arrays validated by
:func:`as_pmf`. Everything is computed in nats; bits only appear at output
boundaries via :data:`LN2`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

LN2 = float(np.log(2.0))

PMF_TOL = 1e-12


class InvalidDistribution(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: Optional[tuple] = None

    def __post_init__(self):
        if int(self.size) < 1:
            raise ValueError("alphabet size must be >= 1")
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.size:
                raise ValueError("labels must have one entry per symbol")
            if len(set(labels)) != len(labels):
                raise ValueError("labels must be distinct")
            object.__setattr__(self, "labels", labels)

    @property
    def names(self):
        if self.labels is None:
            return tuple(str(i) for i in range(self.size))
        return self.labels


def as_pmf(values, size: Optional[int] = None, tol: float = PMF_TOL) -> np.ndarray:
    """Validate a probability vector and return a normalized read-only copy.

    Vectors whose total is within ``tol`` of one are rescaled to sum exactly
    (to rounding) to one; anything further off, or with negative entries, is
    rejected.
    """
    p = np.array(values, dtype=np.float64).ravel()
    if p.size == 0:
        raise InvalidDistribution("empty probability vector")
    if size is not None and p.size != size:
        raise InvalidDistribution(f"expected {size} entries, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InvalidDistribution("probabilities must be finite")
    if np.any(p < 0):
        if np.min(p) < -tol:
            raise InvalidDistribution("probabilities must be nonnegative")
        p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
    p = p / total
    p.setflags(write=False)
    return p


def entropy(p) -> float:
    """Shannon entropy in nats with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def binary_entropy(x: float, bits: bool = False) -> float:
    if x < 0 or x > 1:
        raise ValueError("binary entropy needs an argument in [0, 1]")
    h = entropy((x, 1.0 - x))
    return h / LN2 if bits else h


def l1_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(p - q).sum())


def empirical_type(xs: Sequence[int], size: int) -> np.ndarray:
    """Empirical distribution ``count(x)/n`` of a symbol sequence."""
    xs = np.asarray(xs, dtype=np.int64).ravel()
    if xs.size == 0:
        raise ValueError("empirical type of an empty sequence")
    if xs.min() < 0 or xs.max() >= size:
        raise ValueError("symbol out of range for the alphabet")
    counts = np.bincount(xs, minlength=size)
    return counts / xs.size


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    """Table ``d[x, xhat]`` with the statistics the continuity bounds need.

    ``dmin_nonzero`` (d-tilde) is ``None`` when every entry is zero; the
    continuity calculators refuse such matrices.
    """

    d: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("distortion must be a nonempty 2-D table")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distortion entries must be finite and nonnegative")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @classmethod
    def coerce(cls, d) -> "DistortionMatrix":
        return d if isinstance(d, cls) else cls(d)

    @classmethod
    def hamming(cls, n: int, n_hat: Optional[int] = None) -> "DistortionMatrix":
        n_hat = n if n_hat is None else n_hat
        return cls(1.0 - np.eye(n, n_hat))

    @property
    def shape(self):
        return self.d.shape

    @property
    def n_src(self) -> int:
        return self.d.shape[0]

    @property
    def n_rec(self) -> int:
        return self.d.shape[1]

    @property
    def dmax(self) -> float:
        return float(self.d.max())

    @property
    def dmin_nonzero(self) -> Optional[float]:
        return _min_positive(self.d)

    @cached_property
    def row_min(self) -> np.ndarray:
        r = self.d.min(axis=1)
        r.setflags(write=False)
        return r

    @cached_property
    def shifted(self) -> np.ndarray:
        """Row-min shifted table d0 = d - min_xhat d(x, xhat)."""
        d0 = self.d - self.row_min[:, None]
        d0.setflags(write=False)
        return d0

    @property
    def shifted_max(self) -> float:
        return float(self.shifted.max())

    @property
    def shifted_min_nonzero(self) -> Optional[float]:
        return _min_positive(self.shifted)

    @property
    def zero_in_every_row(self) -> bool:
        return bool(np.all(self.row_min == 0))

    def __eq__(self, other):
        return isinstance(other, DistortionMatrix) and np.array_equal(self.d, other.d)

    def __hash__(self):
        return hash(self.d.tobytes())


def _min_positive(a: np.ndarray) -> Optional[float]:
    pos = a[a > 0]
    return float(pos.min()) if pos.size else None


def d_min(p, d) -> float:
    """Smallest achievable average distortion, sum_x p(x) min_xhat d(x, xhat)."""
    d = DistortionMatrix.coerce(d)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (d.n_src,):
        raise ValueError("pmf and distortion dimensions differ")
    return float(p @ d.row_min)


def d_max(p, d) -> float:
    """Distortion of the best constant reproduction, min_xhat sum_x p(x) d(x, xhat)."""
    d = DistortionMatrix.coerce(d)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (d.n_src,):
        raise ValueError("pmf and distortion dimensions differ")
    return float((p @ d.d).min())
