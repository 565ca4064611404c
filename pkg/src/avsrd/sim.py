"""Monte-Carlo simulation of the switcher game.

Randomness comes from counter-based Philox streams keyed by
``(seed, replica, stream)``: subsource outputs, switcher coin flips and
states each have their own stream, so changing one never shifts another.
That separation is what the causality audit relies on: switch positions are
a pure function of (subsource outputs, switcher uniforms, states).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import kernels
from .avs import RuleFamily, StateModel, SubsourceEnsemble, ModelError
from .prob import DistortionMatrix, as_pmf

STREAM_OUTPUTS = 0
STREAM_SWITCHER = 1
STREAM_STATES = 2
STREAM_CODEBOOK = 3

MAX_CODEBOOK_WORDS = 2_000_000
MAX_COVER_CELLS = 50_000_000


class BudgetExceeded(RuntimeError):
    pass


def make_rng(seed: int, replica: int = 0, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replica, stream])))


# -- strategies ------------------------------------------------------------------


@dataclass(frozen=True)
class StrictlyCausal:
    """Switch positions drawn IID from ``weights``, ignoring all outputs."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", as_pmf(self.weights))


@dataclass(frozen=True)
class OneStepRules:
    """Choose among the current candidate symbols with ``rules``."""

    rules: RuleFamily


@dataclass(frozen=True)
class StateRules:
    """Switch position drawn from ``lam[t]`` after seeing the state ``t``."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lam, dtype=np.float64))
        object.__setattr__(self, "lam", np.vstack([as_pmf(r) for r in lam]))


def max_rule(n: int, order) -> OneStepRules:
    """Always take the highest-ranked symbol on offer (``order`` low to high)."""
    return OneStepRules(RuleFamily.max_rule(n, order))


@dataclass(frozen=True)
class HelpfulFullLookahead:
    """Sees the whole block, picks the codeword it can match best, then aligns."""

    codebook: "Codebook"


Strategy = Union[StrictlyCausal, OneStepRules, StateRules, HelpfulFullLookahead]


# -- codebooks -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Codebook:
    words: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.words, dtype=np.int64))
        if w.shape[0] == 0 or w.shape[1] == 0:
            raise ValueError("codebook needs at least one nonempty word")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    @property
    def n(self) -> int:
        return self.words.shape[1]

    def __len__(self) -> int:
        return self.words.shape[0]


def block_distortion(x, book: Codebook, d) -> float:
    """``min_w (1/n) sum_k d(x_k, w_k)``."""
    d = DistortionMatrix.coerce(d)
    x = np.ascontiguousarray(x, dtype=np.int64)
    if x.shape != (book.n,):
        raise ValueError("sequence length differs from the codebook block length")
    return float(kernels.block_distortion(x, np.ascontiguousarray(book.words), d.d))


def build_random_codebook(q_out, rate: float, n: int, seed: int, max_words: int = MAX_CODEBOOK_WORDS) -> Codebook:
    """``ceil(exp(n rate))`` words drawn IID from ``q_out``."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    q = as_pmf(q_out, tol=1e-9)
    expo = n * rate
    if expo > math.log(max_words) + 1e-9:
        raise BudgetExceeded(f"exp({expo:.4g}) words exceed the budget of {max_words}")
    K = max(1, math.ceil(math.exp(expo) - 1e-9))
    rng = make_rng(seed, 0, STREAM_CODEBOOK)
    return Codebook(rng.choice(q.size, size=(K, n), p=q))


def type_class(counts) -> np.ndarray:
    """All sequences with the given symbol counts, lexicographic order."""
    counts = [int(c) for c in counts]
    n = sum(counts)

    def rec(left):
        if sum(left) == 0:
            yield ()
            return
        for x, c in enumerate(left):
            if c:
                left[x] -= 1
                for tail in rec(left):
                    yield (x,) + tail
                left[x] += 1

    return np.array(list(rec(list(counts))), dtype=np.int64).reshape(-1, n)


def build_type_covering_codebook(p_type, D: float, d, n: int, max_cells: int = MAX_COVER_CELLS) -> Codebook:
    """Greedy cover of a type class by balls of radius ``D``.

    Candidates are all of ``Xhat^n``; each round adds the word covering the
    most still-uncovered sequences (smallest index on ties). The result is
    checked exhaustively before it is returned.
    """
    d = DistortionMatrix.coerce(d)
    p = np.asarray(p_type, dtype=np.float64)
    counts = np.rint(p * n).astype(np.int64)
    if p.shape != (d.n_src,) or counts.sum() != n or np.abs(counts - p * n).max() > 1e-9:
        raise ValueError("p_type must be a type with denominator n on the source alphabet")
    if n > 14 or d.n_src > 3 or d.n_rec > 3:
        raise BudgetExceeded("exhaustive covering is limited to n <= 14 and alphabets <= 3")
    seqs = type_class(counts)
    n_words = d.n_rec**n
    if n_words * len(seqs) > max_cells:
        raise BudgetExceeded(f"{n_words} x {len(seqs)} cover table exceeds {max_cells} cells")
    cand = np.array(list(itertools.product(range(d.n_rec), repeat=n)), dtype=np.int64)
    # dist[w, s] = sum_k d(s_k, w_k)
    dist = np.zeros((len(cand), len(seqs)))
    for k in range(n):
        dist += d.d[seqs[:, k][None, :], cand[:, k][:, None]]
    covers = dist <= D * n + 1e-9
    uncovered = np.ones(len(seqs), dtype=bool)
    chosen = []
    while uncovered.any():
        gain = covers[:, uncovered].sum(axis=1)
        w = int(np.argmax(gain))
        if gain[w] == 0:
            raise RuntimeError("some sequence cannot be covered within D by any word")
        chosen.append(w)
        uncovered &= ~covers[w]
    book = Codebook(cand[chosen])
    worst = max(block_distortion(s, book, d) for s in seqs)
    if worst > D + 1e-9:
        raise RuntimeError("greedy cover failed exhaustive verification")
    return book


# -- sampling --------------------------------------------------------------------


@dataclass
class Block:
    x: np.ndarray
    s: np.ndarray
    outputs: np.ndarray = field(repr=False)
    t: Optional[np.ndarray] = None


def outputs_to_masks(outputs: np.ndarray) -> np.ndarray:
    return np.bitwise_or.reduce(np.left_shift(1, outputs), axis=1).astype(np.int64)


def _first_position(outputs: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.argmax(outputs == x[:, None], axis=1).astype(np.int64)


def switch_positions(strategy, outputs, u, t=None, d=None) -> np.ndarray:
    """Switch positions as a pure function of the realized randomness.

    ``outputs`` is the ``(n, m)`` subsource matrix, ``u`` the switcher's
    uniforms and ``t`` the state sequence (state strategies only).
    """
    outputs = np.asarray(outputs, dtype=np.int64)
    n, m = outputs.shape
    if isinstance(strategy, StrictlyCausal):
        if strategy.weights.size != m:
            raise ModelError("mixing weights need one entry per subsource")
        cum = np.cumsum(strategy.weights)
        cum[-1] = 2.0
        return np.searchsorted(cum, u, side="right").astype(np.int64)
    if isinstance(strategy, OneStepRules):
        masks = outputs_to_masks(outputs)
        x = kernels.select_by_rules(masks, strategy.rules.cumulative(), np.ascontiguousarray(u))
        return _first_position(outputs, x)
    if isinstance(strategy, StateRules):
        if t is None:
            raise ModelError("state strategy needs the state sequence")
        cum = np.cumsum(strategy.lam, axis=1)
        cum[:, -1] = 2.0
        return np.argmax(cum[t] > u[:, None], axis=1).astype(np.int64)
    if isinstance(strategy, HelpfulFullLookahead):
        if d is None:
            raise ModelError("helpful strategy needs the distortion table")
        d = DistortionMatrix.coerce(d)
        n_sym = d.n_src
        masks = outputs_to_masks(outputs)
        rho = np.zeros((1 << n_sym, d.n_rec))
        for mk in range(1, 1 << n_sym):
            members = [x for x in range(n_sym) if mk >> x & 1]
            rho[mk] = d.d[members].min(axis=0)
        words = np.ascontiguousarray(strategy.codebook.words)
        w, _ = kernels.best_word(masks, words, rho)
        target = words[w]
        # smallest symbol of V_k attaining rho(V_k, target_k)
        cost = np.where(outputs_sym_table(masks, n_sym), d.d[:, target].T, np.inf)
        x = np.argmin(cost, axis=1)
        return _first_position(outputs, x)
    raise TypeError(f"unknown strategy {type(strategy).__name__}")


def outputs_sym_table(masks: np.ndarray, n_sym: int) -> np.ndarray:
    """Boolean ``(n, n_sym)`` membership table of each candidate set."""
    return ((masks[:, None] >> np.arange(n_sym)) & 1).astype(bool)


def sample_block(model, strategy, n: int, seed: int, replica: int = 0, d=None) -> Block:
    """Draw one block: subsource outputs, switch positions and the source string."""
    if n < 1:
        raise ValueError("block length must be positive")
    rng_out = make_rng(seed, replica, STREAM_OUTPUTS)
    u = make_rng(seed, replica, STREAM_SWITCHER).random(n)
    t = None
    if isinstance(model, StateModel):
        t = make_rng(seed, replica, STREAM_STATES).choice(model.n_states, size=n, p=model.alpha)
        # subsources are drawn independently given the state
        outputs = np.empty((n, model.m), dtype=np.int64)
        for l in range(model.m):
            cum = np.cumsum(model.cond[l], axis=1)
            cum[:, -1] = 2.0
            v = rng_out.random(n)
            outputs[:, l] = np.argmax(cum[t] > v[:, None], axis=1)
        if isinstance(strategy, StateRules) and strategy.lam.shape != (model.n_states, model.m):
            raise ModelError("state weights must have shape (|T|, m)")
    elif isinstance(model, SubsourceEnsemble):
        if isinstance(strategy, StateRules):
            raise ModelError("state strategies need a StateModel")
        outputs = model.sample_outputs(rng_out, n)
    else:
        raise TypeError("model must be a SubsourceEnsemble or a StateModel")
    if isinstance(strategy, OneStepRules) and strategy.rules.n != model.n:
        raise ModelError("rule family and source use different alphabets")
    s = switch_positions(strategy, outputs, u, t, d)
    x = outputs[np.arange(n), s]
    return Block(x, s, outputs, t)


# -- experiments -----------------------------------------------------------------


def outside_relaxed_core(types: np.ndarray, ens: SubsourceEnsemble, delta: float) -> np.ndarray:
    """Rows violating some ``p(V) >= kappa(V) - delta``."""
    n = ens.n
    masks = np.arange(1, 1 << n)
    ind = ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)
    mass = types @ ind.T
    return np.any(mass < ens.kappa_table[masks][None, :] - delta - 1e-12, axis=1)


@dataclass
class SimReport:
    seed: int
    n: int
    replicas: int
    delta: float
    types: list = field(repr=False)
    distortions: Optional[list] = field(default=None, repr=False)
    mean_type: list = field(default_factory=list)
    mean_distortion: Optional[float] = None
    mean_l1_to_target: Optional[float] = None
    fraction_outside: Optional[float] = None
    concentration_bound: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def run_experiment(
    model,
    strategy,
    d,
    n: int,
    replicas: int,
    delta: float,
    seed: int,
    book: Optional[Codebook] = None,
    target=None,
) -> SimReport:
    from .continuity import type_concentration_bound

    d = DistortionMatrix.coerce(d)
    n_sym = d.n_src
    types = np.empty((replicas, n_sym))
    dists = np.empty(replicas) if book is not None else None
    for r in range(replicas):
        blk = sample_block(model, strategy, n, seed, r, d)
        types[r] = np.bincount(blk.x, minlength=n_sym) / n
        if book is not None:
            dists[r] = block_distortion(blk.x, book, d)
    ens = model if isinstance(model, SubsourceEnsemble) else model.source
    frac = None
    if ens is not None:
        frac = float(outside_relaxed_core(types, ens, delta).mean())
    l1 = None
    if target is not None:
        l1 = float(np.abs(types - np.asarray(target, dtype=np.float64)).sum(axis=1).mean())
    return SimReport(
        seed=seed,
        n=n,
        replicas=replicas,
        delta=delta,
        types=types.tolist(),
        distortions=None if dists is None else dists.tolist(),
        mean_type=types.mean(axis=0).tolist(),
        mean_distortion=None if dists is None else float(dists.mean()),
        mean_l1_to_target=l1,
        fraction_outside=frac,
        concentration_bound=type_concentration_bound(n, delta, n_sym),
    )
