import math

import numpy as np
import pytest

from photondistill.circuits import DISTILL3_PATTERN, distill3, ideal_input, run_circuit
from photondistill.measurement import DetectionPattern, WeightedEnsemble, postselect
from photondistill.noise import (
    DetectorModel,
    mixed_order_scan,
    noisy_postselect,
    noisy_postselect_mc,
)
from photondistill.source import SourceModel, enumerate_inputs

PATTERN = DetectionPattern.from_counts(DISTILL3_PATTERN)


def ideal_output():
    return run_circuit(ideal_input(3), distill3().circuit)


def noisy_ensemble(eps):
    inputs = enumerate_inputs(3, SourceModel.all_distinct(eps))
    return WeightedEnsemble((w, run_circuit(s, distill3().circuit)) for w, s in inputs)


class TestDetectorModel:
    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            DetectorModel(dark_count_prob=1.0)
        with pytest.raises(ValueError):
            DetectorModel(loss_prob=-0.1)
        with pytest.raises(ValueError):
            DetectorModel(miscount_up_bias=1.5)

    def test_noiseless_flag(self):
        assert DetectorModel().is_noiseless()
        assert not DetectorModel(loss_prob=0.01).is_noiseless()


class TestZeroNoiseReduction:
    def test_matches_ideal_postselect(self):
        stats = noisy_postselect(ideal_output(), PATTERN, DetectorModel(), max_events=None)
        ideal = postselect(ideal_output(), PATTERN)
        assert stats.accept_prob == pytest.approx(ideal.probability, abs=1e-12)
        assert stats.ideal_output_prob == pytest.approx(ideal.probability, abs=1e-12)
        assert stats.false_accept_bad_output_prob == 0.0
        assert stats.vacuum_output_prob == 0.0

    def test_matches_ideal_on_noisy_source(self):
        ens = noisy_ensemble(0.1)
        stats = noisy_postselect(ens, PATTERN, DetectorModel(), max_events=None)
        ideal = postselect(ens, PATTERN)
        assert stats.accept_prob == pytest.approx(ideal.probability, abs=1e-12)


class TestDarkCounts:
    def test_false_accept_value(self):
        # Only the three-photons-on-the-output-rail term can fake the pattern,
        # and it needs both detectors to fire: weight 2/9 times eps_d^2.
        eps_d = 1e-3
        stats = noisy_postselect(ideal_output(), PATTERN, DetectorModel(dark_count_prob=eps_d), max_events=None)
        assert stats.false_accept_bad_output_prob == pytest.approx((2 / 9) * eps_d**2, rel=1e-9)

    def test_second_order_slope(self):
        values = {}
        for eps_d in (1e-3, 5e-4):
            stats = noisy_postselect(ideal_output(), PATTERN, DetectorModel(dark_count_prob=eps_d), max_events=None)
            values[eps_d] = stats.false_accept_bad_output_prob
        slope = math.log(values[1e-3] / values[5e-4]) / math.log(2)
        assert slope == pytest.approx(2.0, rel=0.05)

    def test_truncation_at_two_events_captures_pairs(self):
        eps_d = 1e-3
        full = noisy_postselect(ideal_output(), PATTERN, DetectorModel(dark_count_prob=eps_d), max_events=None)
        trunc = noisy_postselect(ideal_output(), PATTERN, DetectorModel(dark_count_prob=eps_d), max_events=2)
        assert trunc.false_accept_bad_output_prob == pytest.approx(
            full.false_accept_bad_output_prob, rel=1e-9
        )


class TestLoss:
    def test_vacuum_output_value(self):
        eps_l = 1e-3
        stats = noisy_postselect(ideal_output(), PATTERN, DetectorModel(loss_prob=eps_l), max_events=None)
        assert stats.vacuum_output_prob == pytest.approx(eps_l * (1 - eps_l) ** 2 / 3, rel=1e-9)

    def test_first_order_slope(self):
        values = {}
        for eps_l in (1e-3, 5e-4):
            stats = noisy_postselect(ideal_output(), PATTERN, DetectorModel(loss_prob=eps_l), max_events=None)
            values[eps_l] = stats.vacuum_output_prob
        slope = math.log(values[1e-3] / values[5e-4]) / math.log(2)
        assert slope == pytest.approx(1.0, rel=0.05)

    def test_two_lost_photons_never_accept(self):
        from photondistill.noise import _loss_branches, _signature_groups

        leak = 0.0
        state = ideal_output()
        for prob, lost, lossy in _loss_branches(state, 0.05, state.num_photons):
            if lost < 2:
                continue
            for group_norm, signature, _ in _signature_groups(lossy, frozenset({1, 2})):
                if signature.rail_count(1) == 1 and signature.rail_count(2) == 1:
                    leak += prob * group_norm
        assert leak == 0.0


class TestMiscount:
    def test_no_first_order_false_accepts(self):
        # Open question resolved empirically: a single miscount cannot fake the
        # three-photon pattern; the leading contribution is quadratic.
        values = {}
        for eps_m in (1e-3, 5e-4):
            stats = noisy_postselect(
                ideal_output(), PATTERN, DetectorModel(miscount_prob=eps_m), max_events=None
            )
            values[eps_m] = stats.false_accept_bad_output_prob
        assert values[1e-3] > 0
        slope = math.log(values[1e-3] / values[5e-4]) / math.log(2)
        assert slope == pytest.approx(2.0, rel=0.05)


class TestConservation:
    @pytest.mark.parametrize(
        "model",
        [
            DetectorModel(),
            DetectorModel(dark_count_prob=0.02),
            DetectorModel(miscount_prob=0.03),
            DetectorModel(loss_prob=0.04),
            DetectorModel(0.01, 0.02, 0.03, miscount_up_bias=0.7),
        ],
    )
    def test_accept_plus_reject_is_one(self, model):
        stats = noisy_postselect(noisy_ensemble(0.05), PATTERN, model, max_events=None)
        assert stats.accept_prob + stats.reject_prob == pytest.approx(1.0, abs=1e-10)

    def test_accept_classes_partition(self):
        stats = noisy_postselect(noisy_ensemble(0.05), PATTERN, DetectorModel(0.01, 0.0, 0.02), max_events=None)
        total = stats.ideal_output_prob + stats.false_accept_bad_output_prob + stats.vacuum_output_prob
        assert total == pytest.approx(stats.accept_prob, abs=1e-12)


class TestMixedOrderScan:
    def test_bilinear_coefficient_positive(self):
        fit = mixed_order_scan([0.01, 0.02], [0.01, 0.02])
        assert fit.coefficient > 0
        assert fit.relative_residual < 0.1

    def test_zero_source_error_row_is_quadratic_in_dark(self):
        fit = mixed_order_scan([0.0, 0.02], [0.01, 0.02])
        row = fit.grid[0]
        # With eps = 0, values come from the dark-dark process alone.
        assert row[0] == pytest.approx((2 / 9) * 0.01**2, rel=1e-9)
        assert row[1] == pytest.approx((2 / 9) * 0.02**2, rel=1e-9)

    def test_transpose_symmetry_of_the_fit(self):
        xs, ys = [0.01, 0.02], [0.015, 0.03]

        def synthetic(a, b):
            return 0.3 * a + 0.1 * a * a + 0.2 * b * b + 0.7 * a * b

        direct = mixed_order_scan(xs, ys, false_accept=synthetic)
        flipped = mixed_order_scan(ys, xs, false_accept=lambda a, b: synthetic(b, a))
        assert direct.coefficient == pytest.approx(flipped.coefficient, abs=1e-9)

    def test_degenerate_grid_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            mixed_order_scan([0.01], [0.01, 0.02])

    def test_large_parameters_rejected(self):
        with pytest.raises(ValueError, match="0.05"):
            mixed_order_scan([0.1, 0.2], [0.01, 0.02])


class TestMonteCarlo:
    def test_agrees_with_exact_expansion(self):
        rng = np.random.default_rng(20260810)
        model = DetectorModel(dark_count_prob=0.05, loss_prob=0.05)
        exact = noisy_postselect(ideal_output(), PATTERN, model, max_events=None)
        shots = 40000
        mc = noisy_postselect_mc(ideal_output(), PATTERN, model, shots, rng)
        sigma = math.sqrt(exact.accept_prob * (1 - exact.accept_prob) / shots)
        assert abs(mc.accept_prob - exact.accept_prob) <= 4 * sigma

    def test_requires_shots(self):
        with pytest.raises(ValueError):
            noisy_postselect_mc(ideal_output(), PATTERN, DetectorModel(), 0, np.random.default_rng(1))
