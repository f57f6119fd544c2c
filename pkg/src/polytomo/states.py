"""State representations, canonical test states, and fidelity metrics.

A state of rank ``r`` in an ``s``-dimensional Hilbert space is carried as an
``s x r`` amplitude matrix ``c`` with unit Frobenius norm; its density matrix
is ``c @ c.conj().T``. Rank 1 corresponds to pure states, rank ``s`` to
full-rank mixtures. Right-multiplying ``c`` by any ``r x r`` unitary leaves
the physical state unchanged (gauge freedom).

Qubit basis convention: basis states are ordered by binary integer with
``|0> = |V>``, ``|1> = |H>`` and the leftmost qubit most significant, so for
three qubits ``|HHH>`` sits at index 7.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import (
    EIGENVALUE_TOL,
    check_complex_matrix,
    check_hermitian,
    check_square,
    check_unit_frobenius,
    readonly,
)

__all__ = [
    "AmplitudeMatrix",
    "DensityMatrix",
    "density_from_amplitude",
    "ghz",
    "w_state",
    "ghz_mixture",
    "fidelity_pure",
    "fidelity_mixed",
    "purity",
    "purify",
    "random_pure",
    "nines",
]

# 1 - F is clamped here before taking log10; keeps the nines scale finite.
INFIDELITY_FLOOR = 1e-15
MAX_NINES = 15.0


@dataclass(frozen=True)
class AmplitudeMatrix:
    """Complex ``s x r`` amplitude matrix with unit Frobenius norm.

    A 1-D vector is accepted and stored as a single column (a pure state).
    """

    matrix: np.ndarray

    def __post_init__(self):
        arr = check_complex_matrix(self.matrix, "amplitude matrix")
        if arr.shape[1] > arr.shape[0]:
            raise ValueError(
                f"rank {arr.shape[1]} exceeds dimension {arr.shape[0]}"
            )
        check_unit_frobenius(arr, "amplitude matrix")
        object.__setattr__(self, "matrix", readonly(arr))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def column(self) -> np.ndarray:
        """The state vector of a rank-1 amplitude."""
        if self.rank != 1:
            raise ValueError(f"state has rank {self.rank}, not 1")
        return self.matrix[:, 0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite ``s x s`` matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = check_complex_matrix(self.matrix, "density matrix")
        check_square(arr, "density matrix")
        check_hermitian(arr, "density matrix")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix must have unit trace, got {tr!r}")
        lowest = np.linalg.eigvalsh(arr)[0]
        if lowest < -EIGENVALUE_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lowest!r}")
        object.__setattr__(self, "matrix", readonly(arr))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def density_from_amplitude(amp: AmplitudeMatrix) -> DensityMatrix:
    """Density matrix ``c c+`` of an amplitude matrix."""
    c = amp.matrix
    return DensityMatrix(c @ c.conj().T)


def as_density(state) -> DensityMatrix:
    """Accept an AmplitudeMatrix or DensityMatrix and return the density matrix."""
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, AmplitudeMatrix):
        return density_from_amplitude(state)
    raise TypeError(f"expected AmplitudeMatrix or DensityMatrix, got {type(state)!r}")


def ghz(qubits: int) -> AmplitudeMatrix:
    """Equal superposition of all-|H> and all-|V>: indices 2^l - 1 and 0."""
    if qubits < 2:
        raise ValueError(f"GHZ state needs at least 2 qubits, got {qubits}")
    dim = 2 ** qubits
    vec = np.zeros(dim, dtype=np.complex128)
    vec[0] = vec[-1] = math.sqrt(0.5)
    return AmplitudeMatrix(vec)


def w_state(qubits: int) -> AmplitudeMatrix:
    """Uniform superposition of the single-excitation basis states."""
    if qubits < 2:
        raise ValueError(f"W state needs at least 2 qubits, got {qubits}")
    dim = 2 ** qubits
    vec = np.zeros(dim, dtype=np.complex128)
    amp = 1.0 / math.sqrt(qubits)
    for bit in range(qubits):
        vec[1 << bit] = amp
    return AmplitudeMatrix(vec)


def ghz_mixture(weight: float, dim: int) -> DensityMatrix:
    """Mixture ``f I/s + (1-f) |GHZ><GHZ|`` of white noise and a GHZ projector.

    ``dim`` is 8 for three distinguishable qubits or 4 for the
    permutation-symmetric (degenerate) case, where the GHZ image has equal
    amplitudes on the first and last basis vectors.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"mixture weight must lie in [0, 1], got {weight}")
    if dim not in (4, 8):
        raise ValueError(f"dimension must be 4 or 8, got {dim}")
    vec = np.zeros(dim, dtype=np.complex128)
    vec[0] = vec[-1] = math.sqrt(0.5)
    rho = weight * np.eye(dim) / dim + (1.0 - weight) * np.outer(vec, vec.conj())
    return DensityMatrix(rho)


def fidelity_pure(a: AmplitudeMatrix, b: AmplitudeMatrix) -> float:
    """Squared overlap ``|<a|b>|**2`` of two pure states."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    overlap = np.vdot(a.column(), b.column())
    return min(1.0, float(abs(overlap) ** 2))


def _clipped_positive(vals: np.ndarray) -> np.ndarray:
    """Zero out negatives and eigenvalues within relative rounding noise.

    Square roots amplify rounding noise (sqrt(1e-16) = 1e-8), so eigenvalues
    more than 14 orders below the largest are treated as exact zeros.
    """
    vals = np.clip(vals, 0.0, None)
    top = vals.max(initial=0.0)
    vals[vals < 1e-14 * top] = 0.0
    return vals


def fidelity_mixed(a: DensityMatrix, b: DensityMatrix) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``.

    Computed through Hermitian eigendecompositions with negative and
    rounding-noise eigenvalues clamped to zero before the square roots; the
    result is clamped to [0, 1].
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    vals, vecs = np.linalg.eigh(a.matrix)
    root = (vecs * np.sqrt(_clipped_positive(vals))) @ vecs.conj().T
    inner = root @ b.matrix @ root
    inner = (inner + inner.conj().T) / 2.0
    sing = _clipped_positive(np.linalg.eigvalsh(inner))
    return min(1.0, float(np.sum(np.sqrt(sing)) ** 2))


def purity(rho: DensityMatrix) -> float:
    """``Tr(rho**2)``; 1 for pure states, ``1/s`` for the maximally mixed state."""
    return float(np.vdot(rho.matrix, rho.matrix).real)


def purify(rho: DensityMatrix, rank: int | None = None) -> AmplitudeMatrix:
    """Amplitude matrix whose outer product reproduces ``rho``.

    Columns are the eigenvectors scaled by the square roots of the
    eigenvalues, in decreasing eigenvalue order. ``rank`` may exceed the
    matrix rank of ``rho`` (extra columns are zero) but discarding more than
    1e-10 of spectral weight raises ``ValueError``.
    """
    dim = rho.dim
    if rank is None:
        rank = dim
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    vals, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    discarded = float(np.sum(vals[rank:]))
    if discarded > 1e-10:
        raise ValueError(
            f"rank {rank} discards spectral weight {discarded:.3e} of the state"
        )
    cols = vecs[:, order[:rank]] * np.sqrt(vals[:rank])
    cols = cols / np.linalg.norm(cols)
    return AmplitudeMatrix(cols)


def random_pure(dim: int, seed: int) -> AmplitudeMatrix:
    """Haar-uniform pure state: normalized vector of standard complex Gaussians.

    Deterministic for a given seed.
    """
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return AmplitudeMatrix(vec / np.linalg.norm(vec))


def nines(fidelity: float) -> float:
    """Number of nines ``-log10(1 - F)``, clamped to at most 15."""
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fidelity}")
    return min(MAX_NINES, -math.log10(max(1.0 - fidelity, INFIDELITY_FLOOR)))
