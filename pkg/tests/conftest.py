import numpy as np
import pytest

from photondistill.fock import BeamsplitterSpec, FockState, OccupationConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)


def random_config(rng: np.random.Generator, num_rails=4, num_internals=3, max_photons=5) -> OccupationConfig:
    total = int(rng.integers(1, max_photons + 1))
    counts: dict[tuple[int, int], int] = {}
    for _ in range(total):
        key = (int(rng.integers(num_rails)), int(rng.integers(num_internals)))
        counts[key] = counts.get(key, 0) + 1
    return OccupationConfig.from_counts(counts)


def random_state(rng: np.random.Generator, num_rails=4, num_internals=3, max_photons=5, max_terms=4) -> FockState:
    """Random normalized state; all configurations share one photon number."""
    first = random_config(rng, num_rails, num_internals, max_photons)
    total = first.total()
    configs = {first}
    for _ in range(int(rng.integers(0, max_terms))):
        candidate = random_config(rng, num_rails, num_internals, max_photons)
        if candidate.total() == total:
            configs.add(candidate)
    amps = rng.normal(size=len(configs)) + 1j * rng.normal(size=len(configs))
    amps /= np.linalg.norm(amps)
    return FockState(dict(zip(sorted(configs), amps)), prune_tol=0.0)


def random_beamsplitter(rng: np.random.Generator, num_rails=4) -> BeamsplitterSpec:
    rail_a, rail_b = rng.choice(num_rails, size=2, replace=False)
    return BeamsplitterSpec(
        int(rail_a),
        int(rail_b),
        theta=float(rng.uniform(0, np.pi)),
        phi_0=float(rng.uniform(-np.pi, np.pi)),
        phi_r=float(rng.uniform(-np.pi, np.pi)),
        phi_t=float(rng.uniform(-np.pi, np.pi)),
    )
