"""Imperfect detection and photon loss on top of ideal post-selection.

Dark counts add one spurious count per detector, miscounts shift a reported
count by one, and loss removes photons (from every rail, measured or not)
before detection.  The expansion over noise events is exact and can be
truncated at a configurable number of simultaneous events.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterator, Sequence

import numpy as np

from .fock import FockState, ModeKey, OccupationConfig
from .measurement import DetectionPattern, WeightedEnsemble, postselect

__all__ = [
    "DetectorModel",
    "NoisyPostSelectionStats",
    "noisy_postselect",
    "noisy_postselect_mc",
    "MixedOrderFit",
    "mixed_order_scan",
]


@dataclass(frozen=True, slots=True)
class DetectorModel:
    """Noise parameters: all zero reduces every operation to ideal measurement.

    dark_count_prob: chance, per detector per shot, of one spurious count.
    miscount_prob: chance a detector reports its count off by one;
        `miscount_up_bias` sets the probability the shift is upward (a
        downward shift on a zero count reports zero).
    loss_prob: chance, per photon, of being absorbed before detection.
    """

    dark_count_prob: float = 0.0
    miscount_prob: float = 0.0
    loss_prob: float = 0.0
    miscount_up_bias: float = 0.5

    def __post_init__(self) -> None:
        for name in ("dark_count_prob", "miscount_prob", "loss_prob"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")
        if not 0.0 <= self.miscount_up_bias <= 1.0:
            raise ValueError("miscount_up_bias must lie in [0, 1]")

    def is_noiseless(self) -> bool:
        return self.dark_count_prob == 0.0 and self.miscount_prob == 0.0 and self.loss_prob == 0.0


@dataclass(frozen=True, slots=True)
class NoisyPostSelectionStats:
    """Shot-outcome probabilities under detector noise.

    Accepted shots split into three disjoint classes by the state left on the
    output rail: the ideal photon, the vacuum (photon lost), and anything
    else (wrong photon, wrong count, spurious acceptance).
    """

    accept_prob: float
    ideal_output_prob: float
    false_accept_bad_output_prob: float
    vacuum_output_prob: float
    reject_prob: float


def _loss_branches(
    state: FockState, loss_prob: float, max_lost: int
) -> Iterator[tuple[float, int, FockState]]:
    """Kraus decomposition of per-photon loss: (probability, photons lost, state)."""
    if loss_prob == 0.0:
        yield 1.0, 0, state
        return
    maxima: dict[ModeKey, int] = {}
    for config, _ in state.items():
        for mode, count in config.items():
            maxima[mode] = max(maxima.get(mode, 0), count)
    modes = sorted(maxima)
    for losses in itertools.product(*(range(maxima[mode] + 1) for mode in modes)):
        lost = sum(losses)
        if lost > max_lost:
            continue
        pattern = dict(zip(modes, losses))
        terms: dict[OccupationConfig, complex] = {}
        for config, amp in state.items():
            factor = 1.0
            surviving: list[tuple[ModeKey, int]] = []
            alive = True
            for mode, count in config.items():
                dropped = pattern.get(mode, 0)
                if dropped > count:
                    alive = False
                    break
                factor *= comb(count, dropped) * loss_prob**dropped * (1.0 - loss_prob) ** (count - dropped)
                if count - dropped:
                    surviving.append((mode, count - dropped))
            if not alive:
                continue
            for mode, dropped in pattern.items():
                if dropped and config.count(*mode) == 0:
                    alive = False
                    break
            if alive:
                key = OccupationConfig(tuple(sorted(surviving)))
                terms[key] = terms.get(key, 0j) + amp * math.sqrt(factor)
        if not terms:
            continue
        norm_sq = sum(abs(amp) ** 2 for amp in terms.values())
        if norm_sq <= 1e-24:
            continue
        scale = 1.0 / math.sqrt(norm_sq)
        yield norm_sq, lost, FockState({cfg: amp * scale for cfg, amp in terms.items()})


def _signature_groups(state: FockState, measured: frozenset[int]) -> list[tuple[float, OccupationConfig, FockState]]:
    """Partition all terms by resolved counts on the measured rails."""
    groups: dict[OccupationConfig, dict[OccupationConfig, complex]] = {}
    for config, amp in state.items():
        signature, rest = config.split(measured)
        groups.setdefault(signature, {})[rest] = amp
    out = []
    for signature, rest_terms in groups.items():
        norm_sq = sum(abs(amp) ** 2 for amp in rest_terms.values())
        if norm_sq <= 1e-24:
            continue
        scale = 1.0 / math.sqrt(norm_sq)
        out.append((norm_sq, signature, FockState({cfg: amp * scale for cfg, amp in rest_terms.items()})))
    return out


def _detector_outcomes(model: DetectorModel) -> list[tuple[float, int, int]]:
    """Per-detector report shifts: (probability, number of noise events, shift)."""
    darks = [(1.0 - model.dark_count_prob, 0, 0)]
    if model.dark_count_prob > 0.0:
        darks.append((model.dark_count_prob, 1, 1))
    shifts = [(1.0 - model.miscount_prob, 0, 0)]
    if model.miscount_prob > 0.0:
        up = model.miscount_prob * model.miscount_up_bias
        down = model.miscount_prob * (1.0 - model.miscount_up_bias)
        if up:
            shifts.append((up, 1, 1))
        if down:
            shifts.append((down, 1, -1))
    combined = []
    for (dp, de, ds), (mp, me, ms) in itertools.product(darks, shifts):
        combined.append((dp * mp, de + me, ds + ms))
    return combined


def _classify(output_state: FockState, output_rail: int) -> str:
    if output_state.num_photons == 0:
        return "vacuum"
    if len(output_state) == 1:
        ((config, _),) = output_state.items()
        if config.entries == ((ModeKey(output_rail, 0), 1),):
            return "ideal"
    return "bad"


def noisy_postselect(
    source: WeightedEnsemble | FockState,
    pattern: DetectionPattern | dict[int, int],
    model: DetectorModel,
    max_events: int | None = 2,
    output_rail: int | None = None,
) -> NoisyPostSelectionStats:
    """Post-selection statistics under detector noise, by exact expansion.

    Noise-event combinations (lost photons + dark counts + miscounts) with
    more than `max_events` simultaneous events are dropped; pass None to keep
    every order, in which case accept and reject probabilities sum to 1.
    """
    ensemble = source if isinstance(source, WeightedEnsemble) else WeightedEnsemble.pure(source)
    if len(ensemble) == 0:
        raise ValueError("cannot post-select an empty ensemble")
    if isinstance(pattern, dict):
        pattern = DetectionPattern.from_counts(pattern)
    measured = pattern.rails()
    if output_rail is None:
        unmeasured = sorted(ensemble.occupied_rails() - measured)
        if len(unmeasured) > 1:
            raise ValueError(f"cannot infer the output rail from unmeasured rails {unmeasured}")
        output_rail = unmeasured[0] if unmeasured else 0
    detectors = sorted(measured)
    per_detector = _detector_outcomes(model)
    budget = max_events if max_events is not None else 10**9

    accept = ideal = bad = vacuum = reject = 0.0
    for weight, state in ensemble:
        max_lost = min(budget, state.num_photons) if model.loss_prob else 0
        for loss_prob_factor, lost, lossy_state in _loss_branches(state, model.loss_prob, max_lost):
            base = weight * loss_prob_factor
            for group_norm_sq, signature, conditional in _signature_groups(lossy_state, measured):
                group_weight = base * group_norm_sq
                true_counts = [signature.rail_count(rail) for rail in detectors]
                for combo in itertools.product(per_detector, repeat=len(detectors)):
                    events = lost + sum(e for _, e, _ in combo)
                    if events > budget:
                        continue
                    prob = group_weight
                    for p, _, _ in combo:
                        prob *= p
                    if prob == 0.0:
                        continue
                    reported = [max(0, t + s) for t, (_, _, s) in zip(true_counts, combo)]
                    if all(r == pattern.required(rail) for r, rail in zip(reported, detectors)):
                        accept += prob
                        kind = _classify(conditional, output_rail)
                        if kind == "ideal":
                            ideal += prob
                        elif kind == "vacuum":
                            vacuum += prob
                        else:
                            bad += prob
                    else:
                        reject += prob
    return NoisyPostSelectionStats(
        accept_prob=accept,
        ideal_output_prob=ideal,
        false_accept_bad_output_prob=bad,
        vacuum_output_prob=vacuum,
        reject_prob=reject,
    )


def noisy_postselect_mc(
    source: WeightedEnsemble | FockState,
    pattern: DetectionPattern | dict[int, int],
    model: DetectorModel,
    shots: int,
    rng: np.random.Generator,
    output_rail: int | None = None,
) -> NoisyPostSelectionStats:
    """Monte Carlo estimator of the same statistics; useful to validate truncation."""
    ensemble = source if isinstance(source, WeightedEnsemble) else WeightedEnsemble.pure(source)
    if len(ensemble) == 0:
        raise ValueError("cannot post-select an empty ensemble")
    if shots < 1:
        raise ValueError("need at least one shot")
    if isinstance(pattern, dict):
        pattern = DetectionPattern.from_counts(pattern)
    measured = pattern.rails()
    if output_rail is None:
        unmeasured = sorted(ensemble.occupied_rails() - measured)
        if len(unmeasured) > 1:
            raise ValueError(f"cannot infer the output rail from unmeasured rails {unmeasured}")
        output_rail = unmeasured[0] if unmeasured else 0
    detectors = sorted(measured)

    weights = np.array([w for w, _ in ensemble])
    weights = weights / weights.sum()

    # Pre-compute the stochastic decomposition once per branch; shots then
    # reduce to categorical draws.
    prepared = []
    for _, state in ensemble:
        losses = list(_loss_branches(state, model.loss_prob, state.num_photons))
        loss_probs = np.array([p for p, _, _ in losses])
        loss_probs = loss_probs / loss_probs.sum()
        per_loss = []
        for _, _, lossy in losses:
            groups = _signature_groups(lossy, measured)
            group_probs = np.array([g for g, _, _ in groups])
            per_loss.append((group_probs / group_probs.sum(), groups))
        prepared.append((loss_probs, per_loss))

    counters = {"accept": 0, "ideal": 0, "bad": 0, "vacuum": 0}
    for _ in range(shots):
        loss_probs, per_loss = prepared[rng.choice(len(prepared), p=weights)]
        group_probs, groups = per_loss[rng.choice(len(per_loss), p=loss_probs)]
        _, signature, conditional = groups[rng.choice(len(groups), p=group_probs)]
        ok = True
        for rail in detectors:
            count = signature.rail_count(rail)
            if rng.random() < model.dark_count_prob:
                count += 1
            if rng.random() < model.miscount_prob:
                count += 1 if rng.random() < model.miscount_up_bias else -1
            if max(0, count) != pattern.required(rail):
                ok = False
        if not ok:
            continue
        counters["accept"] += 1
        counters[_classify(conditional, output_rail)] += 1
    return NoisyPostSelectionStats(
        accept_prob=counters["accept"] / shots,
        ideal_output_prob=counters["ideal"] / shots,
        false_accept_bad_output_prob=counters["bad"] / shots,
        vacuum_output_prob=counters["vacuum"] / shots,
        reject_prob=1.0 - counters["accept"] / shots,
    )


@dataclass(frozen=True, slots=True)
class MixedOrderFit:
    """Bilinear fit of false-accept probability over a (source error, dark count) grid."""

    coefficient: float
    relative_residual: float
    grid: tuple[tuple[float, ...], ...]


def mixed_order_scan(
    eps_values: Sequence[float],
    dark_values: Sequence[float],
    false_accept: Callable[[float, float], float] | None = None,
) -> MixedOrderFit:
    """Fit the cross term of false-accept probability in source error x dark counts.

    Evaluates the exact noise expansion of the built-in 3-photon circuit on
    the grid (unless a custom `false_accept(eps, eps_d)` is supplied) and
    least-squares fits c00 + c10*eps + c01*eps_d + c11*eps*eps_d, reporting
    c11 and the RMS residual relative to the RMS of the grid values.
    """
    eps_values = sorted(set(float(e) for e in eps_values))
    dark_values = sorted(set(float(d) for d in dark_values))
    if len(eps_values) < 2 or len(dark_values) < 2:
        raise ValueError("scan grid is degenerate: need at least two distinct values per axis")
    if max(eps_values) > 0.05 or max(dark_values) > 0.05:
        raise ValueError("scan is a small-parameter expansion: keep values at or below 0.05")

    if false_accept is None:
        from .circuits import DISTILL3_PATTERN, distill3, run_circuit
        from .source import SourceModel, enumerate_inputs

        circuit = distill3().circuit

        def false_accept(eps: float, dark: float) -> float:
            inputs = enumerate_inputs(3, SourceModel.all_distinct(eps))
            evolved = WeightedEnsemble((w, run_circuit(s, circuit)) for w, s in inputs)
            stats = noisy_postselect(
                evolved, DISTILL3_PATTERN, DetectorModel(dark_count_prob=dark), max_events=None
            )
            return stats.false_accept_bad_output_prob

    rows = []
    values = []
    grid = []
    for eps in eps_values:
        row = []
        for dark in dark_values:
            value = false_accept(eps, dark)
            rows.append([1.0, eps, dark, eps * dark])
            values.append(value)
            row.append(value)
        grid.append(tuple(row))
    design = np.array(rows)
    target = np.array(values)
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coeffs
    rms_value = float(np.sqrt(np.mean(target**2)))
    rms_residual = float(np.sqrt(np.mean((target - fitted) ** 2)))
    relative = rms_residual / rms_value if rms_value > 0 else 0.0
    return MixedOrderFit(coefficient=float(coeffs[3]), relative_residual=relative, grid=tuple(grid))
