import math

import numpy as np
import pytest

from polytomo import (
    AmplitudeMatrix,
    assign_exposures,
    completeness_factor,
    ghz,
    intensities,
    lift_state,
    project_state,
    reduce_protocol,
    symmetric_basis,
    w_state,
)
from conftest import random_amplitude


@pytest.fixture(scope="module")
def G():
    return symmetric_basis().matrix


class TestBasis:
    def test_corners(self, G):
        assert G[0, 0] == 1.0
        assert G[7, 3] == 1.0

    def test_single_excitation_column(self, G):
        third = 1 / math.sqrt(3)
        for idx in (1, 2, 4):
            assert G[idx, 1] == pytest.approx(third)
        for idx in (3, 5, 6):
            assert G[idx, 2] == pytest.approx(third)

    def test_column_support_by_hamming_weight(self, G):
        for idx in range(8):
            weight = bin(idx).count("1")
            nonzero = np.nonzero(G[idx])[0]
            assert list(nonzero) == [weight]

    def test_exact_isometry(self, G):
        assert np.array_equal(G.T @ G, np.eye(4))

    def test_projector_idempotent(self, G):
        P = G @ G.T
        assert np.max(np.abs(P @ P - P)) < 1e-14


class TestProjectState:
    def test_ghz(self):
        projected, weight = project_state(ghz(3))
        expected = np.zeros(4)
        expected[0] = expected[3] = 1 / math.sqrt(2)
        assert np.allclose(projected.column(), expected)
        assert weight == pytest.approx(1.0)

    def test_w_state_is_fully_symmetric(self):
        projected, weight = project_state(w_state(3))
        assert np.allclose(projected.column(), [0, 1, 0, 0], atol=1e-15)
        assert weight == pytest.approx(1.0)

    def test_antisymmetric_component_rejected(self):
        vec = np.zeros(8, dtype=complex)
        vec[1] = 1 / math.sqrt(2)
        vec[2] = -1 / math.sqrt(2)
        with pytest.raises(ValueError, match="orthogonal"):
            project_state(AmplitudeMatrix(vec))

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            project_state(ghz(2))


class TestLiftState:
    def test_basis_vectors(self):
        lifted = lift_state(AmplitudeMatrix(np.array([1.0, 0, 0, 0])))
        expected = np.zeros(8)
        expected[0] = 1.0
        assert np.allclose(lifted.column(), expected)

    def test_ghz_roundtrip(self):
        vec = np.zeros(4)
        vec[0] = vec[3] = 1 / math.sqrt(2)
        lifted = lift_state(AmplitudeMatrix(vec))
        assert np.allclose(lifted.column(), ghz(3).column())

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            amp = random_amplitude(4, 1, int(rng.integers(2**32)))
            back, weight = project_state(lift_state(amp))
            assert weight == pytest.approx(1.0, abs=1e-14)
            assert np.max(np.abs(back.column() - amp.column())) < 1e-14


class TestReduceProtocol:
    def test_shape(self, tetra3):
        reduced = reduce_protocol(tetra3)
        assert reduced.n_rows == 64 and reduced.dim == 4

    def test_completeness_preserved(self, tetra3, octa3):
        for proto in (tetra3, octa3):
            assert completeness_factor(reduce_protocol(proto)) == pytest.approx(
                completeness_factor(proto))

    def test_projector_sum(self, tetra3):
        reduced = reduce_protocol(tetra3)
        total = reduced.matrix.conj().T @ reduced.matrix
        assert np.max(np.abs(total - 8.0 * np.eye(4))) < 1e-10

    def test_ghz_intensities_match(self, tetra3):
        reduced = reduce_protocol(tetra3)
        projected, _ = project_state(ghz(3))
        lam_full = intensities(tetra3, ghz(3))
        lam_reduced = intensities(reduced, projected)
        assert np.max(np.abs(lam_full - lam_reduced)) < 1e-12

    def test_intensity_equivalence_for_symmetric_states(self, tetra3, octa3, cube1):
        from polytomo import tensor_protocol

        cube3 = tensor_protocol([cube1] * 3)
        rng = np.random.default_rng(23)
        for proto in (tetra3, octa3, cube3):
            reduced = reduce_protocol(proto)
            for _ in range(10):
                amp4 = random_amplitude(4, 1, int(rng.integers(2**32)))
                lam_full = intensities(proto, lift_state(amp4))
                lam_reduced = intensities(reduced, amp4)
                assert np.max(np.abs(lam_full - lam_reduced)) < 1e-12

    def test_exposures_carried_over(self, tetra3):
        assigned = assign_exposures(tetra3, 1e5)
        reduced = reduce_protocol(assigned)
        assert reduced.exposures_assigned
        assert np.array_equal(reduced.exposures, assigned.exposures)

    def test_wrong_dimension(self, tetra):
        with pytest.raises(ValueError):
            reduce_protocol(tetra)
