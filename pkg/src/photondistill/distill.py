"""End-to-end distillation analysis: exact enumeration, closed-form bounds,
the iterated HOM-filter (bunch-and-subtract) comparison, break-even and
crossover finders, and the multi-round resource planner.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuits import (
    DISTILL3_PATTERN,
    DISTILL4_PATTERN,
    Circuit,
    NamedCircuit,
    distill3,
    distill4,
    run_circuit,
    sb_step_circuit,
)
from .fock import FockState, single_photon_state, tensor
from .measurement import DetectionPattern, WeightedEnsemble, fidelity_to_ideal, postselect
from .source import SourceModel, enumerate_inputs, error_configurations, input_state

__all__ = [
    "DistillationReport",
    "PlanStep",
    "analyze",
    "n3_error_upper",
    "n3_error_lower",
    "n3_psuccess_lower",
    "sb_success_prob",
    "sb_expected_photons",
    "sb_error",
    "sb_fit_check",
    "simulate_sb",
    "break_even",
    "crossover_sb",
    "plan",
    "SCHEMES",
]


@dataclass(frozen=True, slots=True)
class DistillationReport:
    """Exact post-selected performance of one distillation round."""

    epsilon_in: float
    p_success: float
    epsilon_out: float
    bound_interval: tuple[float, float] | None
    expected_photons_per_output: float


@dataclass(frozen=True, slots=True)
class PlanStep:
    """One round of iterated distillation."""

    round_index: int
    epsilon_before: float
    epsilon_after: float
    photon_cost_multiplier: float


# ---------------------------------------------------------------------------
# Closed forms for the three-photon circuit
# ---------------------------------------------------------------------------

def n3_error_upper(epsilon: float) -> float:
    """Worst-case output error of the 3-photon circuit, over all error distributions."""
    e = epsilon
    return (e / 3.0) * (1.0 + 2.0 * e) / (1.0 - 2.0 * e + 3.0 * e**2 - e**3)


def n3_error_lower(epsilon: float) -> float:
    """Best-case output error of the 3-photon circuit, over all error distributions."""
    e = epsilon
    return e / (3.0 - 6.0 * e + 6.0 * e**2 - 2.0 * e**3)


def n3_psuccess_lower(epsilon: float) -> float:
    """Lower bound on the 3-photon circuit's post-selection success probability."""
    e = epsilon
    return (1.0 - 2.0 * e + 2.0 * e**2 - 2.0 * e**3) / 3.0


# ---------------------------------------------------------------------------
# Bunch-and-subtract (iterated HOM filter) closed forms
# ---------------------------------------------------------------------------

def sb_success_prob(n: int) -> float:
    """Post-selection success probability of the n-photon bunch-and-subtract
    protocol with perfectly identical photons (an upper bound for noisy ones)."""
    if n < 2:
        raise ValueError("bunch-and-subtract needs at least 2 photons")
    product = 1.0
    for m in range(2, n + 1):
        product *= m / 2.0**m
    return (n / 2.0**n) * product


def sb_expected_photons(n: int) -> float:
    """Expected photons consumed per successfully distilled output photon."""
    return n / sb_success_prob(n)


def sb_error(n: int, epsilon: float) -> float:
    """Best-case output error of bunch-and-subtract for n in {2, 3}."""
    e = epsilon
    if n == 2:
        return e / (2.0 - 2.0 * e + e**2)
    if n == 3:
        return (2.0 * e - 2.0 * e**2 + e**3) / (6.0 - 12.0 * e + 9.0 * e**2 - 2.0 * e**3)
    raise ValueError("closed-form bunch-and-subtract error is available for n = 2 and 3 only")


def sb_fit_check(n_range: Iterable[int] = range(2, 13)) -> tuple[float, float]:
    """Least-squares fit of P(n) ~ exp(-c * n**alpha); returns (c, alpha).

    Fits log(-log P) against log n over exact success probabilities.
    """
    ns = sorted(set(n_range))
    if len(ns) < 3:
        raise ValueError("need at least 3 points to fit the success-probability scaling")
    if ns[0] < 2 or ns[-1] > 12:
        raise ValueError("fit range must lie within n = 2..12")
    xs = np.log(ns)
    ys = np.log([-math.log(sb_success_prob(n)) for n in ns])
    design = np.vstack([np.ones_like(xs), xs]).T
    (intercept, alpha), *_ = np.linalg.lstsq(design, ys, rcond=None)
    return math.exp(intercept), float(alpha)


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

def _ensemble_through(circuit: Circuit, ensemble: WeightedEnsemble) -> WeightedEnsemble:
    return WeightedEnsemble((w, run_circuit(state, circuit)) for w, state in ensemble)


def analyze(
    circuit: NamedCircuit | Circuit,
    pattern: DetectionPattern | dict[int, int],
    model: SourceModel,
) -> DistillationReport:
    """Exact one-round report: enumerate inputs, run the circuit, post-select.

    The pattern must leave exactly one rail unmeasured; that rail carries the
    output photon.  The closed-form error interval is attached for the
    built-in 3-photon circuit, where closed forms exist.
    """
    named = circuit if isinstance(circuit, NamedCircuit) else None
    bare = circuit.circuit if isinstance(circuit, NamedCircuit) else circuit
    if isinstance(pattern, dict):
        pattern = DetectionPattern.from_counts(pattern)
    unmeasured = sorted(set(range(bare.num_rails)) - pattern.rails())
    if len(unmeasured) != 1:
        raise ValueError(f"pattern must leave exactly one unmeasured rail, got {unmeasured}")
    output_rail = unmeasured[0]
    n = bare.num_rails
    inputs = enumerate_inputs(n, model)
    result = postselect(_ensemble_through(bare, inputs), pattern)
    if result.probability <= 0.0:
        raise ValueError("post-selection never succeeds for this circuit and pattern")
    epsilon_out = 1.0 - fidelity_to_ideal(result.conditional, output_rail)
    bounds = None
    if named is not None and named.name == "distill3":
        bounds = (n3_error_lower(model.epsilon), n3_error_upper(model.epsilon))
    return DistillationReport(
        epsilon_in=model.epsilon,
        p_success=result.probability,
        epsilon_out=epsilon_out,
        bound_interval=bounds,
        expected_photons_per_output=n / result.probability,
    )


def simulate_sb(n: int, model: SourceModel) -> tuple[float, float]:
    """Exact simulation of the n-photon bunch-and-subtract protocol.

    Photons are merged pairwise on a 50:50 splitter post-selecting zero
    photons in the fresh rail, then one photon is split off by post-selecting
    n - 1 photons.  Each step runs on two abstract rails.  Returns the total
    success probability and the output error.
    """
    if n < 2:
        raise ValueError("bunch-and-subtract needs at least 2 photons")
    step = sb_step_circuit(1)
    total_probability = 0.0
    ideal_probability = 0.0
    for cfg in error_configurations(n, model):
        ensemble = WeightedEnsemble.pure(input_state(cfg.modes[:1]))
        branch_probability = 1.0
        for mode in cfg.modes[1:]:
            joined = WeightedEnsemble(
                (w, tensor(state, single_photon_state(1, mode, 2))) for w, state in ensemble
            )
            bunched = postselect(_ensemble_through(step, joined), DetectionPattern.from_counts({1: 0}))
            branch_probability *= bunched.probability
            if bunched.probability == 0.0:
                break
            ensemble = bunched.conditional
        if branch_probability == 0.0:
            continue
        subtracted = postselect(
            _ensemble_through(step, ensemble), DetectionPattern.from_counts({1: n - 1})
        )
        branch_probability *= subtracted.probability
        if branch_probability == 0.0:
            continue
        total_probability += cfg.weight * branch_probability
        ideal_probability += (
            cfg.weight * branch_probability * fidelity_to_ideal(subtracted.conditional, 0)
        )
    if total_probability == 0.0:
        raise ValueError("bunch-and-subtract post-selection never succeeds")
    return total_probability, 1.0 - ideal_probability / total_probability


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


@functools.cache
def break_even() -> float:
    """The error rate at which the worst-case 3-photon round stops helping."""
    return _bisect(lambda e: n3_error_upper(e) - e, 1e-6, 0.99)


def crossover_sb(which: str, closeness: float = 0.1) -> float:
    """Where the 3-photon scheme meets bunch-and-subtract.

    "n2": the error rate where the worst-case 3-photon output error equals the
    best-case 2-photon bunch-and-subtract error.  "n3": the error rate below
    which the two n = 3 curves agree to within `closeness` relative difference
    (measured against the bunch-and-subtract value).
    """
    if which == "n2":
        return _bisect(lambda e: n3_error_upper(e) - sb_error(2, e), 1e-3, 0.4)
    if which == "n3":
        def gap(e: float) -> float:
            reference = sb_error(3, e)
            return abs(n3_error_upper(e) - reference) / reference - closeness

        return _bisect(gap, 1e-4, 0.3)
    raise ValueError(f"unknown crossover {which!r}; expected 'n2' or 'n3'")


# ---------------------------------------------------------------------------
# Multi-round planning
# ---------------------------------------------------------------------------

def _distill4_worst_case(epsilon: float) -> tuple[float, float]:
    """Worst-case (error, success) of one 4-photon round over the two extremal
    error-mode families; no closed form is published for this circuit."""
    if epsilon == 0.0:
        report = analyze(distill4(), DISTILL4_PATTERN, SourceModel.all_distinct(0.0))
        return report.epsilon_out, report.p_success
    reports = [
        analyze(distill4(), DISTILL4_PATTERN, SourceModel.all_same(epsilon)),
        analyze(distill4(), DISTILL4_PATTERN, SourceModel.all_distinct(epsilon)),
    ]
    return max(r.epsilon_out for r in reports), min(r.p_success for r in reports)


@dataclass(frozen=True, slots=True)
class _Scheme:
    name: str
    photons_per_round: int
    error_map: Callable[[float], float]
    success_prob: Callable[[float], float]
    break_even: Callable[[], float]


@functools.cache
def _distill4_break_even() -> float:
    return _bisect(lambda e: _distill4_worst_case(e)[0] - e, 1e-4, 0.95, tol=1e-8)


SCHEMES: dict[str, _Scheme] = {
    "present3": _Scheme(
        "present3", 3, n3_error_upper, n3_psuccess_lower, break_even
    ),
    "present4": _Scheme(
        "present4",
        4,
        lambda e: _distill4_worst_case(e)[0],
        lambda e: _distill4_worst_case(e)[1],
        _distill4_break_even,
    ),
    "sb2": _Scheme("sb2", 2, lambda e: sb_error(2, e), lambda e: sb_success_prob(2), lambda: 1.0),
    "sb3": _Scheme("sb3", 3, lambda e: sb_error(3, e), lambda e: sb_success_prob(3), lambda: 1.0),
}


def plan(epsilon0: float, target_epsilon: float, scheme: str = "present3") -> tuple[list[PlanStep], float]:
    """Iterate a scheme's worst-case error map until the target error is reached.

    Photon cost compounds multiplicatively: every round needs its inputs
    distilled by the previous one, so the expected raw-photon count per final
    output is the product of n / p_success over the rounds.  Raises when
    epsilon0 is at or above the scheme's break-even error.
    """
    if not 0.0 <= target_epsilon:
        raise ValueError("target error must be non-negative")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    picked = SCHEMES[scheme]
    if target_epsilon < epsilon0:
        limit = picked.break_even()
        if epsilon0 >= limit:
            raise ValueError(
                f"initial error {epsilon0} is not distillable by {scheme}: break-even is {limit:.4f}"
            )
    steps: list[PlanStep] = []
    total = 1.0
    epsilon = epsilon0
    while epsilon > target_epsilon:
        if len(steps) >= 200:
            raise RuntimeError("plan did not converge within 200 rounds")
        after = picked.error_map(epsilon)
        multiplier = picked.photons_per_round / picked.success_prob(epsilon)
        total *= multiplier
        steps.append(PlanStep(len(steps) + 1, epsilon, after, multiplier))
        epsilon = after
    return steps, total
