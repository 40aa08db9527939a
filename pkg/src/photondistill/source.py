"""The noisy photon source and exact enumeration of multi-photon input ensembles.

Each emitted photon is ideal with probability 1 - epsilon and lands in an
orthogonal error mode otherwise.  The random relative phases of error
amplitudes make the source a dephased mixture, so ensembles over orthogonal
error-mode assignments capture it exactly, to all orders in epsilon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import FockState, OccupationConfig
from .measurement import WeightedEnsemble

__all__ = [
    "AllSameErrorMode",
    "AllDistinctErrorModes",
    "ExplicitErrorModes",
    "SourceModel",
    "ErrorConfiguration",
    "error_configurations",
    "input_state",
    "enumerate_inputs",
    "sample_input",
]


@dataclass(frozen=True, slots=True)
class AllSameErrorMode:
    """Every error event populates the same error mode (mode 1)."""


@dataclass(frozen=True, slots=True)
class AllDistinctErrorModes:
    """Every error event populates a fresh error mode; canonically, rail k uses mode k + 1."""


@dataclass(frozen=True, slots=True)
class ExplicitErrorModes:
    """Error modes 1..m populated with explicit weights p_i; the weights sum to epsilon."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("explicit error distribution needs at least one mode weight")
        if any(p <= 0 for p in self.weights):
            raise ValueError("explicit error-mode weights must be positive")


ErrorDistribution = AllSameErrorMode | AllDistinctErrorModes | ExplicitErrorModes


@dataclass(frozen=True, slots=True)
class SourceModel:
    """Per-photon error probability plus how error events spread over modes."""

    epsilon: float
    distribution: ErrorDistribution = field(default_factory=AllDistinctErrorModes)

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if isinstance(self.distribution, ExplicitErrorModes):
            total = sum(self.distribution.weights)
            if abs(total - self.epsilon) > 1e-12:
                raise ValueError(f"explicit mode weights sum to {total!r}, expected epsilon = {self.epsilon!r}")

    @staticmethod
    def all_same(epsilon: float) -> SourceModel:
        return SourceModel(epsilon, AllSameErrorMode())

    @staticmethod
    def all_distinct(epsilon: float) -> SourceModel:
        return SourceModel(epsilon, AllDistinctErrorModes())

    @staticmethod
    def explicit(weights: Sequence[float]) -> SourceModel:
        ws = tuple(float(w) for w in weights)
        return SourceModel(sum(ws), ExplicitErrorModes(ws))


@dataclass(frozen=True, slots=True)
class ErrorConfiguration:
    """One joint assignment of internal modes to the n input photons (0 = ideal)."""

    modes: tuple[int, ...]
    weight: float

    def error_count(self) -> int:
        return sum(1 for mode in self.modes if mode > 0)


def _rail_options(rail: int, model: SourceModel) -> list[tuple[float, int]]:
    options = []
    if model.epsilon < 1.0:
        options.append((1.0 - model.epsilon, 0))
    if model.epsilon > 0.0:
        dist = model.distribution
        if isinstance(dist, AllSameErrorMode):
            options.append((model.epsilon, 1))
        elif isinstance(dist, AllDistinctErrorModes):
            options.append((model.epsilon, rail + 1))
        elif isinstance(dist, ExplicitErrorModes):
            options.extend((p, mode) for mode, p in enumerate(dist.weights, start=1))
        else:
            raise ValueError(f"unknown error distribution {dist!r}")
    return options


def error_configurations(n: int, model: SourceModel) -> list[ErrorConfiguration]:
    """All joint mode assignments for n photons, with their probabilities."""
    if n < 1:
        raise ValueError("need at least one photon")
    per_rail = [_rail_options(rail, model) for rail in range(n)]
    configurations = []
    for combo in itertools.product(*per_rail):
        weight = 1.0
        modes = []
        for p, mode in combo:
            weight *= p
            modes.append(mode)
        configurations.append(ErrorConfiguration(tuple(modes), weight))
    return configurations


def input_state(modes: Sequence[int]) -> FockState:
    """Product state with one photon per rail, rail k in internal mode modes[k]."""
    config = OccupationConfig.from_counts(((rail, mode), 1) for rail, mode in enumerate(modes))
    return FockState({config: 1.0})


def enumerate_inputs(n: int, model: SourceModel) -> WeightedEnsemble:
    """Exact input ensemble for n photons drawn independently from the source."""
    return WeightedEnsemble(
        (cfg.weight, input_state(cfg.modes)) for cfg in error_configurations(n, model)
    )


def sample_input(n: int, model: SourceModel, rng: np.random.Generator) -> FockState:
    """Draw one pure input branch with its ensemble weight."""
    if n < 1:
        raise ValueError("need at least one photon")
    modes = []
    for rail in range(n):
        options = _rail_options(rail, model)
        probs = np.array([p for p, _ in options])
        pick = rng.choice(len(options), p=probs / probs.sum())
        modes.append(options[pick][1])
    return input_state(modes)
