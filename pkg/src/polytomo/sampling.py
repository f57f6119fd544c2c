"""Seeded Poisson sampling of measurement counts.

Reproducibility contract: counts depend only on (protocol, state, seed). Each
call builds a fresh ``numpy.random.Generator(PCG64(seed))`` and draws the rows
in order, consuming only uniform doubles. The Poisson variates themselves are
generated in-package (sequential-search inversion below mean 10, Hormann's
PTRS transformed rejection at or above 10) so that the byte-exact outputs
pinned by the test suite cannot drift with numpy's internal algorithms.

Campaign runs derive their per-run seeds as
``seed_run = base_seed XOR (run_index * SEED_STRIDE) mod 2**64``
so that parallel execution order cannot affect any run's data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocols import Protocol, intensities
from .states import as_density
from .validation import check_counts, check_exposures, readonly

__all__ = [
    "CountData",
    "sample_poisson",
    "draw_counts",
    "expected_counts",
    "derive_run_seed",
    "SEED_STRIDE",
]

MASK64 = (1 << 64) - 1
# Odd 64-bit constant (2**64 / golden ratio); spreads consecutive run indices.
SEED_STRIDE = 0x9E3779B97F4A7C15
# Mean above which the sampler switches from inversion to PTRS rejection.
PTRS_THRESHOLD = 10.0


@dataclass(frozen=True)
class CountData:
    """Observed event counts with the exposures and seed that produced them."""

    counts: np.ndarray
    exposures: np.ndarray
    seed: int
    n_expected: float

    def __post_init__(self):
        k = np.asarray(self.counts)
        if k.ndim != 1:
            raise ValueError(f"counts must be 1-D, got shape {k.shape}")
        if np.any(k < 0):
            raise ValueError("counts must be nonnegative")
        t = check_exposures(self.exposures, k.size)
        object.__setattr__(self, "counts", readonly(k))
        object.__setattr__(self, "exposures", readonly(t))

    @property
    def n_rows(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def sample_poisson(rng: np.random.Generator, mean: float) -> int:
    """One Poisson variate from the generator's uniform stream.

    mean == 0 consumes no randomness and returns 0.
    """
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"Poisson mean must be finite and nonnegative, got {mean}")
    if mean == 0.0:
        return 0
    if mean < PTRS_THRESHOLD:
        # Sequential-search inversion via a product of uniforms.
        bound = math.exp(-mean)
        k = 0
        prod = rng.random()
        while prod > bound:
            k += 1
            prod *= rng.random()
        return k
    # Hormann's PTRS transformed rejection (exact, no normal approximation).
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    vr = 0.9277 - 3.6224 / (b - 2.0)
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    log_mean = math.log(mean)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= k * log_mean - mean - math.lgamma(k + 1)):
            return k


def _require_exposures(protocol: Protocol) -> None:
    if not protocol.exposures_assigned:
        raise ValueError(
            f"protocol {protocol.name!r} has no exposures; call assign_exposures first"
        )


def expected_counts(protocol: Protocol, state) -> np.ndarray:
    """Noiseless expected counts ``lambda_j t_j`` per row."""
    _require_exposures(protocol)
    return intensities(protocol, as_density(state)) * protocol.exposures


def draw_counts(protocol: Protocol, state, seed: int) -> CountData:
    """Independent Poisson counts with means ``lambda_j t_j``, row by row."""
    means = expected_counts(protocol, state)
    rng = np.random.default_rng(seed)
    k = np.array([sample_poisson(rng, m) for m in means], dtype=np.int64)
    return CountData(
        counts=k,
        exposures=protocol.exposures,
        seed=int(seed),
        n_expected=float(means.sum()),
    )


def derive_run_seed(base_seed: int, run_index: int) -> int:
    """Per-run seed: ``base XOR (index * SEED_STRIDE)`` in 64-bit arithmetic."""
    if run_index < 0:
        raise ValueError(f"run index must be nonnegative, got {run_index}")
    return (int(base_seed) ^ ((run_index * SEED_STRIDE) & MASK64)) & MASK64


def counts_from_values(values, exposures, seed: int = 0) -> CountData:
    """Wrap raw (possibly non-integer) count values for oracle tests."""
    k = check_counts(values)
    return CountData(
        counts=k,
        exposures=exposures,
        seed=int(seed),
        n_expected=float(np.sum(k)),
    )
