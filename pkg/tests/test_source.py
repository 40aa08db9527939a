import math

import numpy as np
import pytest

from photondistill.fock import OccupationConfig
from photondistill.source import (
    AllDistinctErrorModes,
    AllSameErrorMode,
    ExplicitErrorModes,
    SourceModel,
    enumerate_inputs,
    error_configurations,
    input_state,
    sample_input,
)


class TestSourceModel:
    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            SourceModel.all_same(1.0)
        with pytest.raises(ValueError):
            SourceModel.all_same(-0.1)

    def test_explicit_weights_must_sum_to_epsilon(self):
        with pytest.raises(ValueError, match="sum"):
            SourceModel(0.3, ExplicitErrorModes((0.1, 0.1)))
        model = SourceModel.explicit([0.1, 0.1])
        assert model.epsilon == pytest.approx(0.2)

    def test_explicit_weights_positive(self):
        with pytest.raises(ValueError, match="positive"):
            ExplicitErrorModes((0.1, 0.0))

    def test_all_same_equals_single_mode_explicit(self):
        eps = 0.17
        same = error_configurations(3, SourceModel.all_same(eps))
        explicit = error_configurations(3, SourceModel.explicit([eps]))
        assert {(c.modes, round(c.weight, 15)) for c in same} == {
            (c.modes, round(c.weight, 15)) for c in explicit
        }


class TestEnumerateInputs:
    def test_zero_error_single_branch(self):
        ens = enumerate_inputs(3, SourceModel.all_same(0.0))
        assert len(ens) == 1
        weight, state = ens.branches[0]
        assert weight == 1.0
        assert state.amplitude(OccupationConfig.from_counts({(0, 0): 1, (1, 0): 1, (2, 0): 1})) == 1.0

    def test_all_same_branch_count_and_weights(self):
        eps = 0.2
        ens = enumerate_inputs(3, SourceModel.all_same(eps))
        assert len(ens) == 8
        for weight, state in ens:
            errors = sum(1 for c in state.configs() for mode, _ in c.items() if mode.internal > 0)
            assert weight == pytest.approx((1 - eps) ** (3 - errors) * eps**errors)

    @pytest.mark.parametrize(
        "model",
        [SourceModel.all_same(0.13), SourceModel.all_distinct(0.13), SourceModel.explicit([0.05, 0.08])],
    )
    def test_single_error_class_weight(self, model):
        eps = model.epsilon
        configs = error_configurations(3, model)
        one_error = sum(c.weight for c in configs if c.error_count() == 1)
        assert one_error == pytest.approx(3 * eps * (1 - eps) ** 2, abs=1e-12)

    def test_all_distinct_two_error_modes_are_unique(self):
        configs = error_configurations(3, SourceModel.all_distinct(0.3))
        two_error_total = 0.0
        for cfg in configs:
            if cfg.error_count() == 2:
                errors = [m for m in cfg.modes if m > 0]
                assert len(set(errors)) == 2
                two_error_total += cfg.weight
        assert two_error_total == pytest.approx(3 * 0.3**2 * 0.7, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize(
        "model",
        [
            SourceModel.all_same(0.21),
            SourceModel.all_distinct(0.21),
            SourceModel.explicit([0.07, 0.07, 0.07]),
        ],
    )
    def test_weights_sum_to_one(self, n, model):
        total = sum(c.weight for c in error_configurations(n, model))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_first_order_truncation_matches_known_weights(self):
        eps, n = 0.08, 4
        configs = error_configurations(n, SourceModel.all_distinct(eps))
        zero = [c for c in configs if c.error_count() == 0]
        singles = [c for c in configs if c.error_count() == 1]
        assert len(zero) == 1 and zero[0].weight == pytest.approx((1 - eps) ** n)
        assert len(singles) == n
        for cfg in singles:
            assert cfg.weight == pytest.approx(eps * (1 - eps) ** (n - 1))

    def test_explicit_collision_probability(self):
        # Conditioned on two errors, same-mode probability is sum(p_i^2)/eps^2.
        weights = [0.02, 0.08]
        model = SourceModel.explicit(weights)
        eps = model.epsilon
        configs = [c for c in error_configurations(2, model) if c.error_count() == 2]
        same = sum(c.weight for c in configs if c.modes[0] == c.modes[1])
        total = sum(c.weight for c in configs)
        expected = sum(p**2 for p in weights) / eps**2
        assert same / total == pytest.approx(expected, abs=1e-12)

    def test_collision_weights_are_extremal(self):
        # Same-mode collision mass: maximal for the single-mode source,
        # minimal (zero) for fresh-mode-per-event.
        eps = 0.3

        def collision_mass(model):
            mass = 0.0
            for cfg in error_configurations(3, model):
                errors = [m for m in cfg.modes if m > 0]
                if len(errors) >= 2 and len(set(errors)) < len(errors):
                    mass += cfg.weight
            return mass

        same = collision_mass(SourceModel.all_same(eps))
        distinct = collision_mass(SourceModel.all_distinct(eps))
        explicit = collision_mass(SourceModel.explicit([eps / 2, eps / 2]))
        assert distinct == 0.0
        assert distinct <= explicit <= same

    def test_invalid_photon_count(self):
        with pytest.raises(ValueError):
            enumerate_inputs(0, SourceModel.all_same(0.1))


class TestSampleInput:
    def test_zero_error_always_ideal(self, rng):
        ideal = input_state([0, 0, 0])
        for _ in range(25):
            assert sample_input(3, SourceModel.all_same(0.0), rng).allclose(ideal)

    def test_error_histogram_matches_binomial(self):
        rng = np.random.default_rng(42)
        eps, n, draws = 0.5, 3, 20000
        counts = np.zeros(n + 1)
        for _ in range(draws):
            state = sample_input(n, SourceModel.all_same(eps), rng)
            (config,) = state.configs()
            errors = sum(1 for mode, _ in config.items() if mode.internal > 0)
            counts[errors] += 1
        for k in range(n + 1):
            p = math.comb(n, k) * eps**k * (1 - eps) ** (n - k)
            sigma = math.sqrt(draws * p * (1 - p))
            assert abs(counts[k] - draws * p) <= 3 * sigma

    def test_fixed_seed_reproducible(self):
        model = SourceModel.explicit([0.1, 0.2])
        first = [sample_input(4, model, np.random.default_rng(7)) for _ in range(10)]
        second = [sample_input(4, model, np.random.default_rng(7)) for _ in range(10)]
        for a, b in zip(first, second):
            assert a.allclose(b)
