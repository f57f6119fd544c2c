"""Reduction of three indistinguishable qubits to the symmetric 4-dim space.

When the three photons share one spatial and frequency mode, only states
invariant under particle permutation are physical. The symmetric subspace of
the 8-dim three-qubit space is spanned by four vectors (grouped by the number
of |H> excitations), and the isometry ``G`` mapping the 4-dim coordinates onto
the 8-dim space turns any three-qubit protocol into an equivalent ququart
protocol with the same row count and intensities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .protocols import Protocol
from .states import AmplitudeMatrix
from .validation import readonly

__all__ = [
    "SymmetricBasis",
    "symmetric_basis",
    "project_state",
    "lift_state",
    "reduce_protocol",
]

# Amplitudes lost to the antisymmetric sector below this weight are an error.
MIN_SYMMETRIC_WEIGHT = 1e-12


@dataclass(frozen=True)
class SymmetricBasis:
    """The 8x4 isometry whose columns are the symmetric basis vectors.

    Column ``k`` has equal weight ``1/sqrt(binom(3, k))`` on the basis indices
    of Hamming weight ``k``; ``G+ G`` is the 4x4 identity exactly.
    """

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", readonly(self.matrix))


def symmetric_basis() -> SymmetricBasis:
    """Build the three-qubit symmetric-subspace isometry."""
    third = 1.0 / math.sqrt(3.0)
    G = np.zeros((8, 4))
    for index in range(8):
        weight = index.bit_count()
        G[index, weight] = 1.0 if weight in (0, 3) else third
    return SymmetricBasis(G)


def project_state(amp: AmplitudeMatrix) -> tuple[AmplitudeMatrix, float]:
    """Project an 8-dim amplitude onto the symmetric sector.

    Returns the renormalized 4-dim amplitude together with the pre-projection
    weight (the Frobenius norm of the raw projection). Raises ``ValueError``
    for states orthogonal to the symmetric subspace.
    """
    if amp.dim != 8:
        raise ValueError(f"expected an 8-dim state, got dimension {amp.dim}")
    G = symmetric_basis().matrix
    raw = G.T @ amp.matrix
    weight = float(np.linalg.norm(raw))
    if weight < MIN_SYMMETRIC_WEIGHT:
        raise ValueError("state is orthogonal to the symmetric subspace")
    return AmplitudeMatrix(raw / weight), weight


def lift_state(amp: AmplitudeMatrix) -> AmplitudeMatrix:
    """Embed a 4-dim symmetric-sector amplitude back into the 8-dim space."""
    if amp.dim != 4:
        raise ValueError(f"expected a 4-dim state, got dimension {amp.dim}")
    G = symmetric_basis().matrix
    return AmplitudeMatrix(G @ amp.matrix)


def reduce_protocol(protocol: Protocol) -> Protocol:
    """Restrict an 8-dim protocol to the symmetric sector: rows become row @ G.

    Row count and exposures are unchanged, and intensities of symmetric states
    are preserved exactly.
    """
    if protocol.dim != 8:
        raise ValueError(f"expected an 8-dim protocol, got dimension {protocol.dim}")
    G = symmetric_basis().matrix
    return replace(
        protocol,
        name=f"{protocol.name}_sym4",
        matrix=protocol.matrix @ G,
    )
