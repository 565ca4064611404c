"""Ready-made binary models used in the worked examples and regression tests."""

from __future__ import annotations

import numpy as np

from .avs import StateModel, SubsourceEnsemble


def bern(p1: float) -> np.ndarray:
    return np.array([1.0 - p1, p1])


def two_bernoulli(p1: float = 0.25, p2: float = 1.0 / 3.0) -> SubsourceEnsemble:
    """Two independent binary subsources, Bern(p1) and Bern(p2)."""
    return SubsourceEnsemble.from_independent([bern(p1), bern(p2)])


def fair_coins() -> SubsourceEnsemble:
    return two_bernoulli(0.5, 0.5)


def xor_state(ens: SubsourceEnsemble | None = None) -> StateModel:
    """The switcher sees ``x_1 xor x_2``."""
    ens = two_bernoulli() if ens is None else ens
    return StateModel.from_observation(ens, lambda idx: idx[0] ^ idx[1])


def observe_second(ens: SubsourceEnsemble | None = None) -> StateModel:
    """The switcher sees ``x_2`` exactly."""
    ens = two_bernoulli() if ens is None else ens
    return StateModel.from_observation(ens, lambda idx: idx[1])


def noisy_second(delta: float, ens: SubsourceEnsemble | None = None) -> StateModel:
    """The switcher sees ``x_2`` through a binary symmetric channel."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    ens = two_bernoulli() if ens is None else ens

    def channel(idx):
        out = np.full(2, delta)
        out[idx[1]] = 1.0 - delta
        return out

    return StateModel.from_observation(ens, channel)


def noisy_second_closed_form(delta: float) -> float:
    """Largest attainable P(x=1) for :func:`noisy_second` on the default pair."""
    return 0.5 - 5.0 * delta / 12.0 if delta < 0.4 else 1.0 / 3.0


NAMED = {
    "two-bernoulli": two_bernoulli,
    "fair-coins": fair_coins,
    "xor-state": xor_state,
    "observe-second": observe_second,
}


def builtin(name: str):
    """Model by name; ``noisy-second:<delta>`` takes the crossover probability."""
    if name.startswith("noisy-second:"):
        return noisy_second(float(name.split(":", 1)[1]))
    try:
        return NAMED[name]()
    except KeyError:
        raise ValueError(
            f"unknown built-in model {name!r}; choose from {sorted(NAMED)} or noisy-second:<delta>"
        ) from None
