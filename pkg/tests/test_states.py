import math

import numpy as np
import pytest

from polytomo import (
    AmplitudeMatrix,
    DensityMatrix,
    density_from_amplitude,
    fidelity_mixed,
    fidelity_pure,
    ghz,
    ghz_mixture,
    nines,
    purify,
    purity,
    random_pure,
    w_state,
)
from conftest import random_amplitude


def basis_state(dim, index):
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return AmplitudeMatrix(vec)


class TestAmplitudeMatrix:
    def test_accepts_unit_vector(self):
        amp = AmplitudeMatrix(np.array([1.0, 0.0]))
        assert amp.dim == 2 and amp.rank == 1

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError, match="Frobenius"):
            AmplitudeMatrix(np.array([1.0, 1.0]))

    def test_rejects_rank_above_dim(self):
        with pytest.raises(ValueError, match="rank"):
            AmplitudeMatrix(np.ones((2, 3)) / math.sqrt(6))

    def test_matrix_is_immutable(self):
        amp = ghz(3)
        with pytest.raises(ValueError):
            amp.matrix[0] = 0.0


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.5], [0.0, 0.5]])
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(m)

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="negative"):
            DensityMatrix(np.diag([1.5, -0.5]))


class TestDensityFromAmplitude:
    def test_basis_state(self):
        rho = density_from_amplitude(basis_state(4, 0))
        assert np.allclose(rho.matrix, np.diag([1, 0, 0, 0]))

    def test_ghz_outer_product(self):
        rho = density_from_amplitude(ghz(3)).matrix
        expected = np.zeros((8, 8))
        expected[0, 0] = expected[0, 7] = expected[7, 0] = expected[7, 7] = 0.5
        assert np.allclose(rho, expected)

    def test_maximally_mixed_purification(self):
        amp = AmplitudeMatrix(np.eye(8) / math.sqrt(8))
        rho = density_from_amplitude(amp)
        assert np.allclose(rho.matrix, np.eye(8) / 8)

    def test_random_amplitudes_give_valid_densities(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            s = int(rng.integers(1, 9))
            r = int(rng.integers(1, s + 1))
            amp = random_amplitude(s, r, int(rng.integers(2**32)))
            rho = density_from_amplitude(amp).matrix
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
            assert abs(np.trace(rho).real - 1.0) < 1e-12
            assert np.linalg.eigvalsh(rho)[0] > -1e-10

    def test_gauge_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            amp = random_amplitude(6, 3, int(rng.integers(2**32)))
            q, _ = np.linalg.qr(rng.standard_normal((3, 3))
                                + 1j * rng.standard_normal((3, 3)))
            rotated = AmplitudeMatrix(amp.matrix @ q)
            diff = (density_from_amplitude(amp).matrix
                    - density_from_amplitude(rotated).matrix)
            assert np.max(np.abs(diff)) < 1e-12


class TestCanonicalStates:
    def test_ghz3_support(self):
        vec = ghz(3).column()
        assert vec[0] == pytest.approx(1 / math.sqrt(2))
        assert vec[7] == pytest.approx(1 / math.sqrt(2))
        assert np.allclose(vec[1:7], 0)

    def test_ghz2_support(self):
        vec = ghz(2).column()
        assert vec[0] == vec[3] == pytest.approx(1 / math.sqrt(2))

    def test_ghz_overlap_with_all_v(self):
        assert fidelity_pure(ghz(3), basis_state(8, 0)) == pytest.approx(0.5)

    def test_ghz_needs_two_qubits(self):
        with pytest.raises(ValueError):
            ghz(1)

    def test_w3_support(self):
        vec = w_state(3).column()
        for idx in (1, 2, 4):
            assert vec[idx] == pytest.approx(1 / math.sqrt(3))
        assert np.linalg.norm(vec) == pytest.approx(1.0)

    def test_w_orthogonal_to_ghz(self):
        assert fidelity_pure(w_state(3), ghz(3)) == pytest.approx(0.0)

    def test_w_needs_two_qubits(self):
        with pytest.raises(ValueError):
            w_state(1)


class TestGhzMixture:
    def test_pure_limit(self):
        rho = ghz_mixture(0.0, 8)
        assert fidelity_mixed(rho, density_from_amplitude(ghz(3))) == pytest.approx(1.0)

    def test_mixed_limit(self):
        assert np.allclose(ghz_mixture(1.0, 8).matrix, np.eye(8) / 8)

    def test_half_mixture_spectrum(self):
        vals = np.sort(np.linalg.eigvalsh(ghz_mixture(0.5, 8).matrix))
        assert vals[-1] == pytest.approx(9 / 16)
        assert np.allclose(vals[:-1], 1 / 16)

    def test_rejects_bad_weight(self):
        with pytest.raises(ValueError):
            ghz_mixture(1.5, 8)


class TestFidelity:
    def test_pure_self_fidelity(self):
        amp = random_amplitude(8, 1, 3)
        assert fidelity_pure(amp, amp) == pytest.approx(1.0)

    def test_orthogonal_states(self):
        assert fidelity_pure(basis_state(8, 7), basis_state(8, 0)) == 0.0

    def test_phase_invariance(self):
        g = ghz(3)
        for theta in (0.3, 1.7, 5.0):
            rotated = AmplitudeMatrix(np.exp(1j * theta) * g.matrix)
            assert fidelity_pure(g, rotated) == pytest.approx(1.0, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fidelity_pure(ghz(2), ghz(3))

    def test_mixed_self_fidelity(self):
        rho = ghz_mixture(0.3, 8)
        assert fidelity_mixed(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_mixed_against_pure_projector(self):
        ghz_rho = density_from_amplitude(ghz(3))
        white = DensityMatrix(np.eye(8) / 8)
        assert fidelity_mixed(white, ghz_rho) == pytest.approx(1 / 8, abs=1e-12)

    def test_half_mixture_against_ghz(self):
        value = fidelity_mixed(ghz_mixture(0.5, 8), density_from_amplitude(ghz(3)))
        assert value == pytest.approx(9 / 16, abs=1e-12)

    def test_symmetry_and_pure_consistency(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            a = random_amplitude(4, 1, int(rng.integers(2**32)))
            b = random_amplitude(4, 1, int(rng.integers(2**32)))
            ra, rb = density_from_amplitude(a), density_from_amplitude(b)
            assert fidelity_mixed(ra, rb) == pytest.approx(fidelity_mixed(rb, ra),
                                                           abs=1e-10)
            assert fidelity_mixed(ra, rb) == pytest.approx(fidelity_pure(a, b),
                                                           abs=1e-10)

    def test_unit_fidelity_iff_equal(self):
        rng = np.random.default_rng(33)
        for _ in range(25):
            a = random_amplitude(5, 3, int(rng.integers(2**32)))
            b = random_amplitude(5, 3, int(rng.integers(2**32)))
            ra, rb = density_from_amplitude(a), density_from_amplitude(b)
            close = np.linalg.norm(ra.matrix - rb.matrix) < 1e-6
            unit = fidelity_mixed(ra, rb) > 1.0 - 1e-10
            assert close == unit
        rho = ghz_mixture(0.4, 8)
        assert fidelity_mixed(rho, rho) > 1.0 - 1e-10


class TestPurity:
    def test_pure_projector(self):
        assert purity(density_from_amplitude(ghz(3))) == pytest.approx(1.0)

    def test_maximally_mixed(self):
        assert purity(DensityMatrix(np.eye(8) / 8)) == pytest.approx(1 / 8)

    def test_half_mixture(self):
        # eigenvalues {9/16, 1/16 x7} -> sum of squares = 88/256
        assert purity(ghz_mixture(0.5, 8)) == pytest.approx(0.34375, abs=1e-12)


class TestPurify:
    def test_roundtrip_full_rank(self):
        rho = ghz_mixture(0.5, 8)
        amp = purify(rho)
        assert np.allclose(amp.matrix @ amp.matrix.conj().T, rho.matrix, atol=1e-12)

    def test_rank_one_of_pure(self):
        rho = density_from_amplitude(ghz(3))
        amp = purify(rho, rank=1)
        assert fidelity_pure(amp, ghz(3)) == pytest.approx(1.0, abs=1e-12)

    def test_excess_rank_pads_zero_columns(self):
        amp = purify(density_from_amplitude(ghz(3)), rank=8)
        assert amp.rank == 8
        assert np.allclose(amp.matrix @ amp.matrix.conj().T,
                           density_from_amplitude(ghz(3)).matrix, atol=1e-12)

    def test_insufficient_rank_raises(self):
        with pytest.raises(ValueError, match="spectral weight"):
            purify(ghz_mixture(0.5, 8), rank=1)


class TestRandomPure:
    def test_unit_norm(self):
        for seed in (0, 1, 99):
            assert np.linalg.norm(random_pure(8, seed).matrix) == pytest.approx(
                1.0, abs=1e-12)

    def test_deterministic(self):
        a = random_pure(6, 12345)
        b = random_pure(6, 12345)
        assert np.array_equal(a.matrix, b.matrix)

    def test_haar_first_moment(self):
        # E |c_0|^2 = 1/s for Haar states; Monte Carlo at s = 2.
        values = [abs(random_pure(2, seed).column()[0]) ** 2
                  for seed in range(10_000)]
        assert np.mean(values) == pytest.approx(0.5, abs=0.02)


class TestNines:
    def test_four_nines(self):
        assert nines(0.9999) == pytest.approx(4.0)

    def test_zero_fidelity(self):
        assert nines(0.0) == pytest.approx(0.0)

    def test_cap_at_perfect_fidelity(self):
        assert nines(1.0) == 15.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            nines(1.5)
