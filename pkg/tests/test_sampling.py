import math

import numpy as np
import pytest
from scipy import stats

from polytomo import (
    AmplitudeMatrix,
    CountData,
    assign_exposures,
    density_from_amplitude,
    derive_run_seed,
    draw_counts,
    expected_counts,
    ghz,
    sample_poisson,
)
from polytomo.sampling import SEED_STRIDE


class TestExpectedCounts:
    def test_cube_one_qubit(self, cube1):
        proto = assign_exposures(cube1, 300)
        state = AmplitudeMatrix(np.array([1.0, 0.0]))
        assert np.allclose(expected_counts(proto, state), [100, 0, 50, 50, 50, 50])

    def test_total_is_n(self, tetra3_n1e5, ghz3):
        assert expected_counts(tetra3_n1e5, ghz3).sum() == pytest.approx(1e5)

    def test_maximally_mixed_flat(self, tetra3_n1e5):
        from polytomo import DensityMatrix

        means = expected_counts(tetra3_n1e5, DensityMatrix(np.eye(8) / 8))
        assert np.allclose(means, 1e5 / 64)

    def test_requires_exposures(self, tetra3, ghz3):
        with pytest.raises(ValueError, match="exposures"):
            expected_counts(tetra3, ghz3)


class TestDrawCounts:
    def test_zero_mean_rows_stay_zero(self, cube1):
        proto = assign_exposures(cube1, 300)
        state = density_from_amplitude(AmplitudeMatrix(np.array([1.0, 0.0])))
        for seed in range(50):
            counts = draw_counts(proto, state, seed)
            assert counts.counts[1] == 0

    def test_deterministic_per_seed(self, tetra3_n1e5, ghz3):
        rho = density_from_amplitude(ghz3)
        a = draw_counts(tetra3_n1e5, rho, seed=987)
        b = draw_counts(tetra3_n1e5, rho, seed=987)
        assert np.array_equal(a.counts, b.counts)
        c = draw_counts(tetra3_n1e5, rho, seed=988)
        assert not np.array_equal(a.counts, c.counts)

    def test_mean_total_over_many_seeds(self, tetra3_n1e5, ghz3):
        # mean of 500 Poisson totals with mean 1e5: sigma ~ sqrt(1e5/500) ~ 14
        rho = density_from_amplitude(ghz3)
        totals = [draw_counts(tetra3_n1e5, rho, seed).total for seed in range(500)]
        sigma = math.sqrt(1e5 / 500)
        assert abs(np.mean(totals) - 1e5) < 3 * sigma

    def test_requires_exposures(self, tetra3, ghz3):
        with pytest.raises(ValueError, match="exposures"):
            draw_counts(tetra3, density_from_amplitude(ghz3), 1)

    def test_n_expected_recorded(self, tetra3_n1e5, ghz3):
        counts = draw_counts(tetra3_n1e5, density_from_amplitude(ghz3), 5)
        assert counts.n_expected == pytest.approx(1e5)
        assert counts.seed == 5


class TestCountData:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            CountData(counts=np.array([1, 2]), exposures=np.ones(3), seed=0,
                      n_expected=3.0)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            CountData(counts=np.array([1, -2]), exposures=np.ones(2), seed=0,
                      n_expected=3.0)


def _poisson_gof(sample, mean, alpha):
    """Chi-square goodness-of-fit against Poisson(mean), tails pooled to
    expected counts of at least 5."""
    sample = np.asarray(sample)
    hi = int(sample.max()) + 1
    observed = np.bincount(sample, minlength=hi + 1).astype(float)
    expected = stats.poisson.pmf(np.arange(hi + 1), mean) * sample.size
    expected[-1] = sample.size - expected[:-1].sum()  # right tail mass
    # pool bins until every expected count is >= 5
    obs_pooled, exp_pooled = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            obs_pooled.append(acc_o)
            exp_pooled.append(acc_e)
            acc_o = acc_e = 0.0
    obs_pooled[-1] += acc_o
    exp_pooled[-1] += acc_e
    chi2 = np.sum((np.array(obs_pooled) - exp_pooled) ** 2 / exp_pooled)
    pvalue = stats.chi2.sf(chi2, df=len(obs_pooled) - 1)
    return pvalue > alpha


class TestPoissonSampler:
    def test_zero_mean(self):
        rng = np.random.default_rng(0)
        assert sample_poisson(rng, 0.0) == 0

    def test_rejects_negative_mean(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_poisson(rng, -1.0)

    @pytest.mark.parametrize("mean", [0.3, 4.0, 9.5, 12.0, 120.0, 2500.0])
    def test_moments(self, mean):
        rng = np.random.default_rng(1234)
        draws = np.array([sample_poisson(rng, mean) for _ in range(20000)])
        se_mean = math.sqrt(mean / draws.size)
        assert abs(draws.mean() - mean) < 5 * se_mean
        assert abs(draws.var() / mean - 1.0) < 0.1

    @pytest.mark.parametrize("case", [
        ("cube", 0, 300),        # brightest row mean ~100 (rejection branch)
        ("tetrahedron", 1, 40),  # all means below 10 (inversion branch)
        ("octahedron", 2, 80),
    ])
    def test_chi_square_goodness_of_fit(self, case):
        from polytomo import cube, octahedron, tetrahedron

        name, seed0, n = case
        factory = {"cube": cube, "tetrahedron": tetrahedron,
                   "octahedron": octahedron}[name]
        proto = assign_exposures(factory(), n)
        from polytomo import random_pure

        rho = density_from_amplitude(random_pure(2, seed0))
        means = expected_counts(proto, rho)
        draws = np.array([draw_counts(proto, rho, seed).counts
                          for seed in range(10_000)])
        for j in range(proto.n_rows):
            if means[j] < 0.5:
                continue
            assert _poisson_gof(draws[:, j], means[j], alpha=0.001), (
                f"{name} row {j} failed goodness of fit"
            )


class TestSeedDerivation:
    def test_formula(self):
        assert derive_run_seed(0, 0) == 0
        assert derive_run_seed(0, 1) == SEED_STRIDE
        assert derive_run_seed(5, 2) == (5 ^ ((2 * SEED_STRIDE) & (2**64 - 1)))

    def test_distinct_across_runs(self):
        seeds = {derive_run_seed(2016, i) for i in range(10_000)}
        assert len(seeds) == 10_000

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError):
            derive_run_seed(1, -1)


class TestByteExactness:
    """Counts pinned per seed: the sampler algorithm must never drift."""

    def test_pinned_counts(self, tetra3_n1e5, ghz3):
        counts = draw_counts(tetra3_n1e5, density_from_amplitude(ghz3), seed=2016)
        frozen = [2486, 3762, 475, 1626, 3720, 2544, 1710, 438, 431, 1605, 1631,
                  436, 1638, 443, 434, 1693, 3662, 2466, 1651, 445, 2491, 3764,
                  449, 1629, 1632, 424, 442, 1667, 433, 1580, 1617, 426, 414,
                  1678, 1673, 479, 1616, 420, 429, 1637, 1700, 449, 3748, 2506,
                  434, 1680, 2569, 3726, 1628, 435, 456, 1671, 399, 1646, 1661,
                  444, 461, 1660, 2514, 3705, 1568, 408, 3725, 2502]
        assert counts.counts.tolist() == frozen
        assert counts.total == 99891
