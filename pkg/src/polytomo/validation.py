"""Input validation helpers.

Small, sklearn-style check functions used by the domain types and the
estimator. Each returns a validated (possibly copied) numpy array or raises
``ValueError`` with a message naming the offending argument.
"""

from __future__ import annotations

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-10


def check_complex_matrix(x, name: str) -> np.ndarray:
    """Coerce to a 2-D complex array (1-D input becomes a column)."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_unit_frobenius(arr: np.ndarray, name: str, tol: float = NORM_TOL) -> None:
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must have unit Frobenius norm, got {norm!r}")


def check_square(arr: np.ndarray, name: str) -> None:
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")


def check_hermitian(arr: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> None:
    if np.max(np.abs(arr - arr.conj().T)) > tol:
        raise ValueError(f"{name} must be Hermitian within {tol}")


def check_counts(k, n_rows: int | None = None) -> np.ndarray:
    """Validate an event-count vector; float entries are allowed for noiseless oracles."""
    arr = np.asarray(k, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"counts must be 1-D, got shape {arr.shape}")
    if n_rows is not None and arr.size != n_rows:
        raise ValueError(f"counts has {arr.size} entries, protocol has {n_rows} rows")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("counts must be finite and nonnegative")
    return arr


def check_exposures(t, n_rows: int | None = None) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"exposures must be 1-D, got shape {arr.shape}")
    if n_rows is not None and arr.size != n_rows:
        raise ValueError(f"exposures has {arr.size} entries, expected {n_rows}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("exposures must be finite and positive")
    return arr


def readonly(arr: np.ndarray) -> np.ndarray:
    """Own a copy of the data and mark it immutable."""
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out
