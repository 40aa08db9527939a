"""Circuit descriptors, the built-in distillation circuits, and layout resolution.

The figures the built-ins come from leave the exact rail pairings ambiguous, so
the canonical layouts are pinned by searching pair assignments until the
circuit reproduces the published ideal-input output state up to a global
phase.  The search results are frozen here as constants; a regression test
re-runs the search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .fock import (
    ASYMMETRIC_THETA,
    FIFTY_FIFTY_THETA,
    PHI_0,
    PHI_R,
    PHI_T,
    BeamsplitterSpec,
    FockState,
    OccupationConfig,
    apply_beamsplitter,
    single_photon_state,
    states_equal_up_to_phase,
    tensor,
)

__all__ = [
    "Circuit",
    "NamedCircuit",
    "LayoutTemplate",
    "CircuitParseError",
    "run_circuit",
    "resolve_layout",
    "ideal_input",
    "hom2",
    "distill3",
    "distill4",
    "sb_step_circuit",
    "builtin_circuit",
    "BUILTIN_NAMES",
    "distill3_ideal_output",
    "distill4_ideal_output",
    "DISTILL3_PATTERN",
    "DISTILL4_PATTERN",
    "DISTILL3_OUTPUT_RAIL",
    "DISTILL4_OUTPUT_RAIL",
    "parse_circuit_text",
    "format_circuit",
]


@dataclass(frozen=True, slots=True)
class Circuit:
    """An ordered sequence of beamsplitters acting on `num_rails` rails."""

    num_rails: int
    elements: tuple[BeamsplitterSpec, ...]

    def __post_init__(self) -> None:
        if self.num_rails < 2:
            raise ValueError("a circuit needs at least 2 rails")
        for bs in self.elements:
            if not (0 <= bs.rail_a < self.num_rails and 0 <= bs.rail_b < self.num_rails):
                raise ValueError(f"beamsplitter rails {(bs.rail_a, bs.rail_b)} outside 0..{self.num_rails - 1}")


@dataclass(frozen=True, slots=True)
class NamedCircuit:
    name: str
    circuit: Circuit


@dataclass(frozen=True, slots=True)
class LayoutTemplate:
    """A layout family: fixed angle sequence on a fixed rail count, pairings open."""

    num_rails: int
    thetas: tuple[float, ...]


class CircuitParseError(ValueError):
    """Raised for malformed circuit text; carries the offending line number."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def ideal_input(num_rails: int) -> FockState:
    """One ideal-mode photon on every rail."""
    state = single_photon_state(0, 0, num_rails)
    for rail in range(1, num_rails):
        state = tensor(state, single_photon_state(rail, 0, num_rails))
    return state


def run_circuit(state: FockState, circuit: Circuit) -> FockState:
    """Apply the circuit's beamsplitters in order."""
    outside = [rail for rail in state.occupied_rails() if rail >= circuit.num_rails]
    if outside:
        raise ValueError(f"state occupies rails {sorted(outside)} outside the circuit's {circuit.num_rails} rails")
    for bs in circuit.elements:
        state = apply_beamsplitter(state, bs)
    return state


def _pair_candidates(num_rails: int) -> list[tuple[int, int]]:
    # Canonical order: ascending pairs first, then their reversals.
    ordered = [(a, b) for a in range(num_rails) for b in range(a + 1, num_rails)]
    return ordered + [(b, a) for a, b in ordered]


def resolve_layout(template: LayoutTemplate, target: FockState, tolerance: float = 1e-8) -> Circuit:
    """Find the first canonically ordered rail pairing matching a target output.

    Candidates run the template's angle sequence over every ordered rail-pair
    assignment; a candidate matches when its output on the all-ideal input
    equals `target` up to a global phase.  Raises if the target is not
    normalized or nothing matches (which signals a transcription error in the
    angles or the target).
    """
    if abs(target.norm_sq() - 1.0) > 1e-9:
        raise ValueError(f"target state is not normalized (norm^2 = {target.norm_sq()!r})")
    source = ideal_input(template.num_rails)
    for pairing in itertools.product(_pair_candidates(template.num_rails), repeat=len(template.thetas)):
        circuit = Circuit(
            template.num_rails,
            tuple(BeamsplitterSpec(a, b, theta) for (a, b), theta in zip(pairing, template.thetas)),
        )
        if states_equal_up_to_phase(run_circuit(source, circuit), target, tolerance):
            return circuit
    raise ValueError("no rail pairing of the template reproduces the target state")


def _state_from_rail_amplitudes(amplitudes: dict[tuple[int, ...], complex]) -> FockState:
    terms = {}
    for occupations, amp in amplitudes.items():
        config = OccupationConfig.from_counts({(rail, 0): count for rail, count in enumerate(occupations) if count})
        terms[config] = amp
    return FockState(terms)


def distill3_ideal_output() -> FockState:
    """Published pre-measurement output of the 3-photon circuit on an ideal input."""
    r3, r29 = 1 / math.sqrt(3), math.sqrt(2) / 3
    return _state_from_rail_amplitudes(
        {
            (1, 1, 1): 1j * r3,
            (3, 0, 0): r29,
            (0, 3, 0): 1j * r29,
            (0, 0, 3): r29,
        }
    )


def distill4_ideal_output() -> FockState:
    """Published pre-measurement output of the 4-photon circuit on an ideal input."""
    quarter, corner = 0.25, math.sqrt(3.0 / 32.0)
    return _state_from_rail_amplitudes(
        {
            (1, 1, 1, 1): 0.5,
            (2, 2, 0, 0): quarter,
            (2, 0, 2, 0): -quarter,
            (2, 0, 0, 2): quarter,
            (0, 2, 2, 0): quarter,
            (0, 2, 0, 2): -quarter,
            (0, 0, 2, 2): quarter,
            (4, 0, 0, 0): corner,
            (0, 4, 0, 0): corner,
            (0, 0, 4, 0): corner,
            (0, 0, 0, 4): corner,
        }
    )


# Rail pairings recovered by resolve_layout against the published outputs and
# frozen here; tests regenerate them from the templates.
_DISTILL3_PAIRS: tuple[tuple[int, int], ...] = ((0, 2), (0, 1), (1, 2))
_DISTILL3_THETAS = (FIFTY_FIFTY_THETA, ASYMMETRIC_THETA, FIFTY_FIFTY_THETA)
_DISTILL4_PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (2, 3), (0, 3), (1, 2))
_DISTILL4_THETAS = (FIFTY_FIFTY_THETA,) * 4

#: Detection layout for the built-in circuits: measured rails and required counts.
DISTILL3_PATTERN = {1: 1, 2: 1}
DISTILL3_OUTPUT_RAIL = 0
DISTILL4_PATTERN = {1: 1, 2: 1, 3: 1}
DISTILL4_OUTPUT_RAIL = 0


def hom2() -> NamedCircuit:
    """Two-rail Hong-Ou-Mandel circuit: a single 50:50 beamsplitter."""
    return NamedCircuit("hom2", Circuit(2, (BeamsplitterSpec.fifty_fifty(0, 1),)))


def distill3() -> NamedCircuit:
    """Three-photon distillation circuit: 50:50, asymmetric (tan theta = sqrt 2), 50:50."""
    elements = tuple(
        BeamsplitterSpec(a, b, theta) for (a, b), theta in zip(_DISTILL3_PAIRS, _DISTILL3_THETAS)
    )
    return NamedCircuit("distill3", Circuit(3, elements))


def distill4() -> NamedCircuit:
    """Four-photon distillation circuit: four 50:50 beamsplitters."""
    elements = tuple(
        BeamsplitterSpec(a, b, theta) for (a, b), theta in zip(_DISTILL4_PAIRS, _DISTILL4_THETAS)
    )
    return NamedCircuit("distill4", Circuit(4, elements))


def sb_step_circuit(m: int) -> Circuit:
    """One bunching step of the iterated HOM-filter protocol: a 50:50 splitter.

    `m` is the photon count already accumulated on the first rail; the step
    geometry is the same for every m >= 1.
    """
    if m < 1:
        raise ValueError("bunching step requires m >= 1 photons on the first rail")
    return Circuit(2, (BeamsplitterSpec.fifty_fifty(0, 1),))


BUILTIN_NAMES = ("hom2", "distill3", "distill4")


def builtin_circuit(name: str) -> NamedCircuit:
    if name == "hom2":
        return hom2()
    if name == "distill3":
        return distill3()
    if name == "distill4":
        return distill4()
    if name.startswith("sb_step(") and name.endswith(")"):
        m = int(name[len("sb_step(") : -1])
        return NamedCircuit(name, sb_step_circuit(m))
    raise ValueError(f"unknown builtin circuit {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def parse_circuit_text(text: str) -> Circuit:
    """Parse the one-element-per-line circuit format.

    Grammar: a `rails <n>` header, then `bs <rail_a> <rail_b> <theta> [phi0 phiR phiT]`
    lines with angles in radians.  Omitted phases default to the module
    convention.  Blank lines and `#` comments are ignored.
    """
    num_rails: int | None = None
    elements: list[BeamsplitterSpec] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        keyword = fields[0].lower()
        if keyword == "rails":
            if num_rails is not None:
                raise CircuitParseError(line_number, "duplicate rails header")
            if len(fields) != 2:
                raise CircuitParseError(line_number, "expected: rails <n>")
            try:
                num_rails = int(fields[1])
            except ValueError:
                raise CircuitParseError(line_number, f"rail count {fields[1]!r} is not an integer") from None
            if num_rails < 2:
                raise CircuitParseError(line_number, "rail count must be at least 2")
        elif keyword == "bs":
            if num_rails is None:
                raise CircuitParseError(line_number, "rails header must come before bs lines")
            if len(fields) not in (4, 7):
                raise CircuitParseError(line_number, "expected: bs <rail_a> <rail_b> <theta> [phi0 phiR phiT]")
            try:
                rail_a, rail_b = int(fields[1]), int(fields[2])
                angles = [float(f) for f in fields[3:]]
            except ValueError:
                raise CircuitParseError(line_number, f"could not parse numbers in {line!r}") from None
            phases = angles[1:] if len(angles) > 1 else [PHI_0, PHI_R, PHI_T]
            try:
                bs = BeamsplitterSpec(rail_a, rail_b, angles[0], *phases)
            except ValueError as exc:
                raise CircuitParseError(line_number, str(exc)) from None
            if not (0 <= rail_a < num_rails and 0 <= rail_b < num_rails):
                raise CircuitParseError(line_number, f"rails {(rail_a, rail_b)} outside 0..{num_rails - 1}")
            elements.append(bs)
        else:
            raise CircuitParseError(line_number, f"unknown directive {fields[0]!r}")
    if num_rails is None:
        raise CircuitParseError(1, "missing rails header")
    return Circuit(num_rails, tuple(elements))


def format_circuit(circuit: Circuit) -> str:
    lines = [f"rails {circuit.num_rails}"]
    for bs in circuit.elements:
        default_phases = (bs.phi_0, bs.phi_r, bs.phi_t) == (PHI_0, PHI_R, PHI_T)
        if default_phases:
            lines.append(f"bs {bs.rail_a} {bs.rail_b} {bs.theta!r}")
        else:
            lines.append(f"bs {bs.rail_a} {bs.rail_b} {bs.theta!r} {bs.phi_0!r} {bs.phi_r!r} {bs.phi_t!r}")
    return "\n".join(lines) + "\n"


def distill3_template() -> LayoutTemplate:
    return LayoutTemplate(3, _DISTILL3_THETAS)


def distill4_template() -> LayoutTemplate:
    return LayoutTemplate(4, _DISTILL4_THETAS)
