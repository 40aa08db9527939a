"""Sparse second-quantized photon states on spatial rails, and beamsplitter evolution.

A photon occupies a spatial rail and carries an internal mode label (0 for the
ideal mode, k > 0 for orthogonal error modes).  States are sparse maps from
occupation configurations to complex amplitudes.  Beamsplitters mix a pair of
rails and act identically on every internal mode, which is what makes
identical photons interfere while distinguishable ones do not.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, NamedTuple

__all__ = [
    "DEFAULT_PRUNE_TOL",
    "PHI_0",
    "PHI_R",
    "PHI_T",
    "FIFTY_FIFTY_THETA",
    "ASYMMETRIC_THETA",
    "ModeKey",
    "OccupationConfig",
    "FockState",
    "BeamsplitterSpec",
    "single_photon_state",
    "vacuum_state",
    "tensor",
    "inner_product",
    "apply_beamsplitter",
    "apply_rail_unitary",
    "prune",
    "phase_normalized",
    "states_equal_up_to_phase",
    "relabel_internals",
]

#: Amplitudes at or below this magnitude are dropped when states are built.
DEFAULT_PRUNE_TOL = 1e-12

# Phase convention applied to every beamsplitter unless overridden.
PHI_0 = math.pi / 2
PHI_R = -math.pi / 2
PHI_T = 0.0

FIFTY_FIFTY_THETA = math.pi / 4
#: Angle of the reflection-biased splitter in the three-photon circuit (tan theta = sqrt 2).
ASYMMETRIC_THETA = math.atan(math.sqrt(2.0))


class ModeKey(NamedTuple):
    """One optical mode: a spatial rail index plus an internal mode label."""

    rail: int
    internal: int


@dataclass(frozen=True, slots=True, order=True)
class OccupationConfig:
    """Photon counts per mode, stored sparsely in (rail, internal) order.

    Zero-count entries are never stored, so two configurations are equal iff
    their entry tuples are equal.
    """

    entries: tuple[tuple[ModeKey, int], ...] = ()

    @staticmethod
    def from_counts(
        counts: Mapping[tuple[int, int], int] | Iterable[tuple[tuple[int, int], int]],
    ) -> OccupationConfig:
        """Build a canonical configuration from (rail, internal) -> count pairs."""
        pairs = counts.items() if isinstance(counts, Mapping) else counts
        merged: dict[ModeKey, int] = {}
        for key, count in pairs:
            mode = ModeKey(*key)
            if mode.rail < 0 or mode.internal < 0:
                raise ValueError(f"mode indices must be non-negative, got {mode}")
            if count < 0:
                raise ValueError(f"photon count must be non-negative, got {count} at {mode}")
            if count:
                merged[mode] = merged.get(mode, 0) + count
        return OccupationConfig(tuple(sorted(merged.items())))

    def items(self) -> Iterator[tuple[ModeKey, int]]:
        return iter(self.entries)

    def total(self) -> int:
        return sum(count for _, count in self.entries)

    def count(self, rail: int, internal: int) -> int:
        key = ModeKey(rail, internal)
        for mode, count in self.entries:
            if mode == key:
                return count
        return 0

    def rail_count(self, rail: int) -> int:
        """Total photons on a rail, summed over internal modes."""
        return sum(count for mode, count in self.entries if mode.rail == rail)

    def rails(self) -> frozenset[int]:
        return frozenset(mode.rail for mode, _ in self.entries)

    def max_internal(self) -> int:
        """Largest internal mode index present, -1 for the vacuum."""
        return max((mode.internal for mode, _ in self.entries), default=-1)

    def shifted(self, rail_offset: int) -> OccupationConfig:
        if rail_offset == 0:
            return self
        return OccupationConfig(
            tuple((ModeKey(mode.rail + rail_offset, mode.internal), count) for mode, count in self.entries)
        )

    def split(self, rails: frozenset[int] | set[int]) -> tuple[OccupationConfig, OccupationConfig]:
        """Partition into (entries on `rails`, remaining entries)."""
        inside = tuple((mode, count) for mode, count in self.entries if mode.rail in rails)
        outside = tuple((mode, count) for mode, count in self.entries if mode.rail not in rails)
        return OccupationConfig(inside), OccupationConfig(outside)

    def relabeled(self, internal_map: Mapping[int, int]) -> OccupationConfig:
        """Apply a relabeling of internal mode indices (identity where unmapped)."""
        return OccupationConfig.from_counts(
            ((mode.rail, internal_map.get(mode.internal, mode.internal)), count)
            for mode, count in self.entries
        )

    def ket(self, num_rails: int | None = None) -> str:
        """Fock-style label with per-rail totals; internal modes > 0 annotated."""
        top = max((mode.rail for mode, _ in self.entries), default=-1)
        if num_rails is not None:
            top = max(top, num_rails - 1)
        parts = []
        for rail in range(top + 1):
            here = [(mode.internal, count) for mode, count in self.entries if mode.rail == rail]
            if not here:
                parts.append("0")
            else:
                parts.append("+".join(f"{c}" if i == 0 else f"{c}(m{i})" for i, c in sorted(here)))
        return "|" + ",".join(parts) + ">"

    def __str__(self) -> str:
        return self.ket()


class FockState:
    """Superposition of occupation configurations with complex amplitudes.

    Immutable.  Every stored configuration carries the same total photon
    number (photon-number superselection), amplitudes at or below the prune
    tolerance are dropped, and the squared norm may not exceed 1.
    """

    __slots__ = ("_terms", "_num_photons")

    def __init__(
        self,
        terms: Mapping[OccupationConfig, complex] | Iterable[tuple[OccupationConfig, complex]],
        prune_tol: float = DEFAULT_PRUNE_TOL,
    ) -> None:
        pairs = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[OccupationConfig, complex] = {}
        for config, amp in pairs:
            merged[config] = merged.get(config, 0j) + complex(amp)
        kept = {config: amp for config, amp in merged.items() if abs(amp) > prune_tol}
        if not kept:
            raise ValueError("state has no amplitude above the prune tolerance")
        photon_numbers = {config.total() for config in kept}
        if len(photon_numbers) != 1:
            raise ValueError(
                f"configurations mix total photon numbers {sorted(photon_numbers)}; "
                "a state must conserve photon number"
            )
        norm_sq = sum(abs(amp) ** 2 for amp in kept.values())
        if norm_sq > 1.0 + 1e-6:
            raise ValueError(f"squared norm {norm_sq!r} exceeds 1")
        self._terms = kept
        self._num_photons = photon_numbers.pop()

    @property
    def num_photons(self) -> int:
        return self._num_photons

    def items(self) -> Iterator[tuple[OccupationConfig, complex]]:
        return iter(self._terms.items())

    def configs(self) -> Iterator[OccupationConfig]:
        return iter(self._terms)

    def amplitude(self, config: OccupationConfig) -> complex:
        return self._terms.get(config, 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, config: OccupationConfig) -> bool:
        return config in self._terms

    def norm_sq(self) -> float:
        return sum(abs(amp) ** 2 for amp in self._terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalized(self) -> FockState:
        scale = 1.0 / self.norm()
        return FockState({config: amp * scale for config, amp in self._terms.items()}, prune_tol=0.0)

    def occupied_rails(self) -> frozenset[int]:
        rails: set[int] = set()
        for config in self._terms:
            rails.update(config.rails())
        return frozenset(rails)

    def max_internal(self) -> int:
        return max((config.max_internal() for config in self._terms), default=-1)

    def allclose(self, other: FockState, tol: float = 1e-10) -> bool:
        for config in set(self._terms) | set(other._terms):
            if abs(self.amplitude(config) - other.amplitude(config)) > tol:
                return False
        return True

    def __repr__(self) -> str:
        parts = [f"{amp:+.6f} {config.ket()}" for config, amp in sorted(self._terms.items())]
        return "FockState(" + " ".join(parts) + ")"


@dataclass(frozen=True, slots=True)
class BeamsplitterSpec:
    """A two-rail beamsplitter: mixing angle plus three phase parameters.

    The induced 2x2 mode matrix is unitary for any parameter values; theta =
    pi/4 is the balanced (50:50) splitter.
    """

    rail_a: int
    rail_b: int
    theta: float
    phi_0: float = PHI_0
    phi_r: float = PHI_R
    phi_t: float = PHI_T

    def __post_init__(self) -> None:
        if self.rail_a < 0 or self.rail_b < 0:
            raise ValueError("rail indices must be non-negative")
        if self.rail_a == self.rail_b:
            raise ValueError("beamsplitter rails must differ")

    @staticmethod
    def fifty_fifty(rail_a: int, rail_b: int) -> BeamsplitterSpec:
        return BeamsplitterSpec(rail_a, rail_b, FIFTY_FIFTY_THETA)

    def matrix(self) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
        """Rows give the images of the two creation operators: a -> u a + v b, b -> w a + x b."""
        sin_t, cos_t = math.sin(self.theta), math.cos(self.theta)
        u = cmath.exp(1j * (self.phi_0 + self.phi_r)) * sin_t
        v = cmath.exp(1j * (self.phi_0 + self.phi_t)) * cos_t
        w = cmath.exp(1j * (self.phi_0 - self.phi_t)) * cos_t
        x = -cmath.exp(1j * (self.phi_0 - self.phi_r)) * sin_t
        return ((u, v), (w, x))


def vacuum_state() -> FockState:
    return FockState({OccupationConfig(): 1.0})


def single_photon_state(rail: int, internal: int, num_rails: int) -> FockState:
    """One photon in the given internal mode on `rail`, of `num_rails` rails."""
    if num_rails < 1:
        raise ValueError("num_rails must be at least 1")
    if not 0 <= rail < num_rails:
        raise ValueError(f"rail {rail} out of range for {num_rails} rails")
    if internal < 0:
        raise ValueError("internal mode index must be non-negative")
    return FockState({OccupationConfig.from_counts({(rail, internal): 1}): 1.0})


def tensor(a: FockState, b: FockState, rail_offset: int = 0) -> FockState:
    """Product state of `a` and `b`, with `b`'s rails shifted by `rail_offset`.

    The occupied rails of the two factors must be disjoint after the shift.
    """
    b_rails = frozenset(rail + rail_offset for rail in b.occupied_rails())
    collision = a.occupied_rails() & b_rails
    if collision:
        raise ValueError(f"rail collision in tensor product on rails {sorted(collision)}")
    shifted = [(config.shifted(rail_offset), amp) for config, amp in b.items()]
    terms: dict[OccupationConfig, complex] = {}
    for config_a, amp_a in a.items():
        for config_b, amp_b in shifted:
            merged = OccupationConfig(tuple(sorted(config_a.entries + config_b.entries)))
            terms[merged] = amp_a * amp_b
    return FockState(terms)


def inner_product(a: FockState, b: FockState) -> complex:
    """Hilbert-space inner product <a|b>, conjugate-linear in the first argument."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    acc = 0j
    for config, amp in small.items():
        other = large.amplitude(config)
        if other:
            if small is a:
                acc += amp.conjugate() * other
            else:
                acc += other.conjugate() * amp
    return acc


def _expand_pair(n_a: int, n_b: int, u: complex, v: complex, w: complex, x: complex) -> list[tuple[int, int, complex]]:
    """Expand a^n_a b^n_b / sqrt(n_a! n_b!) after a -> u a + v b, b -> w a + x b.

    Returns (p, q, coeff) triples where p + q = n_a + n_b and coeff carries the
    factorial renormalization onto normalized two-mode Fock kets.
    """
    total = n_a + n_b
    acc = [0j] * (total + 1)
    for j in range(n_a + 1):
        base = comb(n_a, j) * (u**j) * (v ** (n_a - j))
        for k in range(n_b + 1):
            acc[j + k] += base * comb(n_b, k) * (w**k) * (x ** (n_b - k))
    scale = 1.0 / math.sqrt(factorial(n_a) * factorial(n_b))
    out = []
    for p, coeff in enumerate(acc):
        if coeff:
            q = total - p
            out.append((p, q, coeff * math.sqrt(factorial(p) * factorial(q)) * scale))
    return out


def apply_rail_unitary(
    state: FockState,
    rail_a: int,
    rail_b: int,
    matrix: tuple[tuple[complex, complex], tuple[complex, complex]],
) -> FockState:
    """Apply an arbitrary 2x2 mode unitary between two rails, per internal mode."""
    (u, v), (w, x) = matrix
    terms: dict[OccupationConfig, complex] = {}
    for config, amp in state.items():
        on_pair: dict[int, list[int]] = {}
        rest: list[tuple[ModeKey, int]] = []
        for mode, count in config.entries:
            if mode.rail == rail_a:
                on_pair.setdefault(mode.internal, [0, 0])[0] = count
            elif mode.rail == rail_b:
                on_pair.setdefault(mode.internal, [0, 0])[1] = count
            else:
                rest.append((mode, count))
        if not on_pair:
            terms[config] = terms.get(config, 0j) + amp
            continue
        internals = sorted(on_pair)
        expansions = [_expand_pair(*on_pair[i], u, v, w, x) for i in internals]
        for combo in itertools.product(*expansions):
            coeff = amp
            added: list[tuple[ModeKey, int]] = []
            for internal, (p, q, c) in zip(internals, combo):
                coeff *= c
                if p:
                    added.append((ModeKey(rail_a, internal), p))
                if q:
                    added.append((ModeKey(rail_b, internal), q))
            merged = OccupationConfig(tuple(sorted(rest + added)))
            terms[merged] = terms.get(merged, 0j) + coeff
    return FockState(terms)


def apply_beamsplitter(state: FockState, bs: BeamsplitterSpec) -> FockState:
    """Evolve a state through one beamsplitter.  Norm and photon number are preserved."""
    return apply_rail_unitary(state, bs.rail_a, bs.rail_b, bs.matrix())


def prune(state: FockState, tolerance: float) -> FockState:
    """Drop every term with |amplitude| <= tolerance."""
    if tolerance < 0:
        raise ValueError("prune tolerance must be non-negative")
    return FockState(dict(state.items()), prune_tol=tolerance)


def _reference_term(state: FockState) -> tuple[OccupationConfig, complex]:
    # Largest-magnitude amplitude; ties broken by canonical config order.
    return min(state.items(), key=lambda item: (-abs(item[1]), item[0]))


def phase_normalized(state: FockState) -> FockState:
    """Rotate the global phase so the largest-magnitude amplitude is real positive."""
    _, ref = _reference_term(state)
    factor = ref.conjugate() / abs(ref)
    return FockState({config: amp * factor for config, amp in state.items()}, prune_tol=0.0)


def states_equal_up_to_phase(a: FockState, b: FockState, tol: float = 1e-10) -> bool:
    """Term-wise equality after removing the global phase of each state."""
    return phase_normalized(a).allclose(phase_normalized(b), tol)


def relabel_internals(state: FockState, internal_map: Mapping[int, int]) -> FockState:
    """Permute internal mode labels (identity where unmapped)."""
    return FockState({config.relabeled(internal_map): amp for config, amp in state.items()}, prune_tol=0.0)
