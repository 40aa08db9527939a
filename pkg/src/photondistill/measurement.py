"""Photon-number-resolving detection, post-selection, and indistinguishability metrics.

Mixed states are weighted ensembles of pure Fock states.  Detectors resolve
total photon number per rail and are blind to internal modes; projecting and
tracing out the measured rails decoheres outcomes with different
internal-mode-resolved counts while keeping coherence within each outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .fock import FockState, OccupationConfig

__all__ = [
    "DetectionPattern",
    "WeightedEnsemble",
    "PostSelectionResult",
    "postselect",
    "reduced_internal_density",
    "purity",
    "fidelity_to_ideal",
]

# Measurement-outcome groups below this squared norm are interference residue.
_GROUP_NORM_FLOOR = 1e-24


@dataclass(frozen=True, slots=True)
class DetectionPattern:
    """Required total photon count per measured rail."""

    counts: tuple[tuple[int, int], ...]

    @staticmethod
    def from_counts(counts: Mapping[int, int]) -> DetectionPattern:
        for rail, count in counts.items():
            if rail < 0:
                raise ValueError(f"rail index {rail} must be non-negative")
            if count < 0:
                raise ValueError(f"required count {count} on rail {rail} must be non-negative")
        return DetectionPattern(tuple(sorted(counts.items())))

    def rails(self) -> frozenset[int]:
        return frozenset(rail for rail, _ in self.counts)

    def items(self) -> Iterator[tuple[int, int]]:
        return iter(self.counts)

    def required(self, rail: int) -> int:
        for r, count in self.counts:
            if r == rail:
                return count
        raise KeyError(rail)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{rail}:{count}" for rail, count in self.counts) + "}"


class WeightedEnsemble:
    """Probability-weighted list of pure states; the workhorse for mixed states.

    Weights must be positive and each state normalized.  The weights sum
    either to 1 (a normalized mixture) or to a pre-normalization probability.
    """

    __slots__ = ("_branches",)

    def __init__(self, branches: Iterable[tuple[float, FockState]]) -> None:
        checked = []
        for weight, state in branches:
            if weight <= 0:
                raise ValueError(f"branch weight {weight} must be positive")
            if abs(state.norm_sq() - 1.0) > 1e-9:
                raise ValueError(f"branch state is not normalized (norm^2 = {state.norm_sq()!r})")
            checked.append((float(weight), state))
        self._branches = tuple(checked)

    @staticmethod
    def pure(state: FockState) -> WeightedEnsemble:
        return WeightedEnsemble([(1.0, state)])

    @property
    def branches(self) -> tuple[tuple[float, FockState], ...]:
        return self._branches

    def __iter__(self) -> Iterator[tuple[float, FockState]]:
        return iter(self._branches)

    def __len__(self) -> int:
        return len(self._branches)

    def total_weight(self) -> float:
        return sum(weight for weight, _ in self._branches)

    def normalized(self) -> WeightedEnsemble:
        total = self.total_weight()
        return WeightedEnsemble([(weight / total, state) for weight, state in self._branches])

    def occupied_rails(self) -> frozenset[int]:
        rails: set[int] = set()
        for _, state in self._branches:
            rails.update(state.occupied_rails())
        return frozenset(rails)


@dataclass(frozen=True, slots=True)
class PostSelectionResult:
    """Probability of a detection pattern and the conditional state that remains."""

    probability: float
    conditional: WeightedEnsemble | None

    def require_conditional(self) -> WeightedEnsemble:
        if self.conditional is None:
            raise ValueError("post-selection matched nothing; no conditional state exists")
        return self.conditional


def _as_ensemble(source: WeightedEnsemble | FockState) -> WeightedEnsemble:
    if isinstance(source, FockState):
        return WeightedEnsemble.pure(source)
    return source


def postselect(source: WeightedEnsemble | FockState, pattern: DetectionPattern) -> PostSelectionResult:
    """Condition on a photon-count pattern over the measured rails.

    Terms are grouped by their internal-mode-resolved counts on the measured
    rails; each resolved outcome consistent with the pattern becomes one
    conditional branch with the measured rails traced out.  The returned
    probability is the total matched weight; conditional branch weights are
    renormalized to sum to 1.  An impossible pattern yields probability 0 with
    no conditional (not an error).
    """
    ensemble = _as_ensemble(source)
    if len(ensemble) == 0:
        raise ValueError("cannot post-select an empty ensemble")
    measured = pattern.rails()
    probability = 0.0
    raw_branches: list[tuple[float, FockState]] = []
    for weight, state in ensemble:
        groups: dict[OccupationConfig, dict[OccupationConfig, complex]] = {}
        for config, amp in state.items():
            if any(config.rail_count(rail) != required for rail, required in pattern.items()):
                continue
            signature, rest = config.split(measured)
            groups.setdefault(signature, {})[rest] = amp
        for rest_terms in groups.values():
            group_norm_sq = sum(abs(amp) ** 2 for amp in rest_terms.values())
            if group_norm_sq <= _GROUP_NORM_FLOOR:
                continue
            probability += weight * group_norm_sq
            scale = 1.0 / math.sqrt(group_norm_sq)
            conditional = FockState({rest: amp * scale for rest, amp in rest_terms.items()})
            raw_branches.append((weight * group_norm_sq, conditional))
    if not raw_branches:
        return PostSelectionResult(0.0, None)
    conditional = WeightedEnsemble([(w / probability, s) for w, s in raw_branches])
    return PostSelectionResult(probability, conditional)


def reduced_internal_density(
    source: WeightedEnsemble | FockState,
    rail: int,
    dim: int | None = None,
) -> np.ndarray:
    """Density matrix over internal modes of the single photon on `rail`.

    Every branch must carry exactly one photon on the rail.  Other rails are
    traced out.  The result is Hermitian, positive semidefinite, and has unit
    trace (branch weights are normalized away).
    """
    ensemble = _as_ensemble(source)
    if len(ensemble) == 0:
        raise ValueError("cannot reduce an empty ensemble")
    if dim is None:
        dim = 1 + max(
            (mode.internal for _, state in ensemble for config, _ in state.items() for mode, _ in config.items()),
            default=0,
        )
    rho = np.zeros((dim, dim), dtype=complex)
    total = 0.0
    for weight, state in ensemble:
        per_rest: dict[OccupationConfig, list[tuple[int, complex]]] = {}
        for config, amp in state.items():
            if config.rail_count(rail) != 1:
                raise ValueError(f"branch has {config.rail_count(rail)} photons on rail {rail}, expected exactly 1")
            on_rail, rest = config.split({rail})
            internal = on_rail.entries[0][0].internal
            if internal >= dim:
                raise ValueError(f"internal mode {internal} exceeds requested dimension {dim}")
            per_rest.setdefault(rest, []).append((internal, amp))
        for entries in per_rest.values():
            for i, amp_i in entries:
                for j, amp_j in entries:
                    rho[i, j] += weight * amp_i * amp_j.conjugate()
        total += weight
    return rho / total


def purity(density: np.ndarray) -> float:
    """tr(rho^2); equals the mean overlap of two independent samples."""
    return float(np.trace(density @ density).real)


def fidelity_to_ideal(source: WeightedEnsemble | FockState, rail: int | None = None) -> float:
    """Population of the ideal internal mode for the single photon on `rail`.

    When `rail` is omitted the ensemble must occupy exactly one rail.
    """
    ensemble = _as_ensemble(source)
    if rail is None:
        rails = ensemble.occupied_rails()
        if len(rails) != 1:
            raise ValueError(f"cannot infer the output rail from occupied rails {sorted(rails)}")
        (rail,) = rails
    return float(reduced_internal_density(ensemble, rail)[0, 0].real)
