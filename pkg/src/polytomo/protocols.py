"""Measurement protocols: instrumental matrices, intensities, exposure times.

A protocol is an ``m x s`` complex matrix whose row ``j`` gives the projection
amplitude of measurement ``j``; the event rate for a state ``rho`` is
``lambda_j = row_j rho row_j+``. The single-qubit protocols here place the
measurement directions on the face centers of Platonic solids (tetrahedron,
cube, octahedron), which for a polyhedron with ``m`` faces yields ``m`` rows
summing to ``(m/2) I``. Multi-qubit protocols are Kronecker products of
single-qubit ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .exceptions import IncompleteProtocolError
from .states import AmplitudeMatrix, DensityMatrix
from .validation import check_complex_matrix, check_exposures, readonly

__all__ = [
    "Protocol",
    "tetrahedron",
    "cube",
    "octahedron",
    "tensor_protocol",
    "intensity_operator",
    "intensities",
    "completeness_factor",
    "assign_exposures",
    "format_protocol",
]

COMPLETENESS_TOL = 1e-8
# Default ceiling on the tensor-product Hilbert dimension (2^6).
MAX_TENSOR_DIM = 64


@dataclass(frozen=True)
class Protocol:
    """Instrumental matrix with per-row exposure times.

    ``exposures_assigned`` records whether exposure times have been set by
    :func:`assign_exposures`; constructors leave the placeholder ``t_j = 1``.
    """

    name: str
    matrix: np.ndarray
    exposures: np.ndarray = field(default=None)
    exposures_assigned: bool = False

    def __post_init__(self):
        arr = check_complex_matrix(self.matrix, "instrumental matrix")
        t = np.ones(arr.shape[0]) if self.exposures is None else self.exposures
        t = check_exposures(t, arr.shape[0])
        object.__setattr__(self, "matrix", readonly(arr))
        object.__setattr__(self, "exposures", readonly(t))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def _phase(eighths: int) -> complex:
    """exp(i pi k / 4) from an integer k, exact at the special angles."""
    return np.exp(1j * math.pi * eighths / 4.0)


def tetrahedron() -> Protocol:
    """Four-row qubit protocol on the face centers of a regular tetrahedron."""
    scale = 12.0 ** -0.25
    hi = math.sqrt(math.sqrt(3.0) + 1.0)
    lo = math.sqrt(math.sqrt(3.0) - 1.0)
    rows = [
        [hi, _phase(1) * lo],
        [hi, _phase(5) * lo],
        [lo, _phase(3) * hi],
        [lo, _phase(7) * hi],
    ]
    return Protocol("tetrahedron", scale * np.array(rows))


def cube() -> Protocol:
    """Six-row qubit protocol on the face centers of a cube (the +-X, +-Y, +-Z axes)."""
    s = math.sqrt(2.0)
    rows = [
        [s, 0.0],
        [0.0, s],
        [1.0, 1.0],
        [1.0, -1.0],
        [1.0, 1.0j],
        [1.0, -1.0j],
    ]
    return Protocol("cube", np.array(rows) / s)


def octahedron() -> Protocol:
    """Eight-row qubit protocol on the face centers of a regular octahedron."""
    scale = 12.0 ** -0.25
    hi = math.sqrt(math.sqrt(3.0) + 1.0)
    lo = math.sqrt(math.sqrt(3.0) - 1.0)
    rows = [[hi, _phase(2 * k + 1) * lo] for k in range(4)]
    rows += [[lo, _phase(2 * k + 1) * hi] for k in range(4)]
    return Protocol("octahedron", scale * np.array(rows))


def tensor_protocol(parts, max_dim: int = MAX_TENSOR_DIM) -> Protocol:
    """Kronecker product of protocols, one measurement row per row combination.

    Rows are ordered lexicographically with the first factor slowest-varying,
    which is exactly the row order of the iterated Kronecker product. A single
    part is returned unchanged.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("tensor_protocol needs at least one protocol")
    if len(parts) == 1:
        return parts[0]
    total_dim = 1
    for p in parts:
        total_dim *= p.dim
    if total_dim > max_dim:
        raise ValueError(
            f"tensor product dimension {total_dim} exceeds the cap {max_dim}"
        )
    matrix = reduce(np.kron, [p.matrix for p in parts])
    names = [p.name for p in parts]
    if len(set(names)) == 1:
        name = f"{names[0]}^{len(names)}"
    else:
        name = "*".join(names)
    return Protocol(name, matrix)


def intensity_operator(protocol: Protocol, row: int) -> np.ndarray:
    """Rank-1 projector ``row+ row`` of measurement ``row`` (0-based index)."""
    if not 0 <= row < protocol.n_rows:
        raise IndexError(f"row {row} outside [0, {protocol.n_rows})")
    x = protocol.matrix[row]
    return np.outer(x.conj(), x)


def intensities(protocol: Protocol, state) -> np.ndarray:
    """Event rates ``lambda_j`` of every protocol row for the given state.

    ``state`` may be an :class:`AmplitudeMatrix` (rates are the squared row
    amplitudes summed over columns) or a :class:`DensityMatrix` (rates are
    ``row rho row+``); the two agree for matching states.
    """
    X = protocol.matrix
    if isinstance(state, AmplitudeMatrix):
        if state.dim != protocol.dim:
            raise ValueError(f"dimension mismatch: {state.dim} vs {protocol.dim}")
        return np.sum(np.abs(X @ state.matrix) ** 2, axis=1)
    if isinstance(state, DensityMatrix):
        if state.dim != protocol.dim:
            raise ValueError(f"dimension mismatch: {state.dim} vs {protocol.dim}")
        return np.einsum("ms,st,mt->m", X, state.matrix, X.conj()).real
    raise TypeError(f"expected AmplitudeMatrix or DensityMatrix, got {type(state)!r}")


def completeness_factor(protocol: Protocol) -> float:
    """The constant ``a`` with ``sum_j row_j+ row_j = a I``.

    Raises :class:`IncompleteProtocolError` when the sum is not proportional
    to the identity within ``1e-8`` relative tolerance.
    """
    X = protocol.matrix
    total = X.conj().T @ X
    a = np.trace(total).real / protocol.dim
    dev = np.max(np.abs(total - a * np.eye(protocol.dim)))
    if dev > COMPLETENESS_TOL * max(a, 1.0):
        raise IncompleteProtocolError(
            f"protocol {protocol.name!r}: projector sum deviates from a*I by {dev:.3e}"
        )
    return float(a)


def assign_exposures(protocol: Protocol, n: float) -> Protocol:
    """Uniform exposure times ``t_j = n / a`` so every unit-trace state yields
    ``n`` expected events in total."""
    if n <= 0:
        raise ValueError(f"expected event total must be positive, got {n}")
    a = completeness_factor(protocol)
    t = np.full(protocol.n_rows, n / a)
    return replace(protocol, exposures=t, exposures_assigned=True)


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def format_protocol(protocol: Protocol) -> str:
    """Text table of the instrumental matrix.

    First line is ``name m s a``; each following line holds one row with
    entries as ``re+imi`` pairs at 17 significant digits.
    """
    a = completeness_factor(protocol)
    lines = [f"{protocol.name} {protocol.n_rows} {protocol.dim} {a:.17g}"]
    for row in protocol.matrix:
        lines.append(" ".join(_fmt_complex(z) for z in row))
    return "\n".join(lines) + "\n"
