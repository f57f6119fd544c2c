"""Maximum-likelihood state reconstruction from Poisson counts.

The stationarity condition of the Poisson log-likelihood over amplitude
matrices is ``A c = B(c) c`` with

    A = sum_j t_j row_j+ row_j          (exposure-weighted, state-independent)
    B = sum_j (k_j / lambda_j) row_j+ row_j   (count-weighted)

and is solved by the fixed-point iteration ``c <- normalize(A^-1 B(c) c)``
from a seeded random start. ``A^-1 (B - A) c`` is a preconditioned gradient of
the log-likelihood, so whenever a plain step would *decrease* the likelihood
(which happens on a small fraction of count vectors, where the undamped map
enters a period-2 cycle) the step is blended back toward the current iterate
until the likelihood is non-decreasing. Convergence is always measured on the
undamped step's displacement, so damping cannot mask an unconverged state.

With rank > 1 the iterate is gauge-ambiguous (``c`` and ``c U`` describe the
same state), so successive iterates are compared through their density
matrices rather than through ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from sklearn.base import BaseEstimator

from .protocols import Protocol, completeness_factor
from .sampling import MASK64, CountData
from .states import (
    AmplitudeMatrix,
    DensityMatrix,
    density_from_amplitude,
    fidelity_mixed,
    fidelity_pure,
)
from .validation import check_counts

__all__ = [
    "ReconstructionResult",
    "log_likelihood",
    "likelihood_operators",
    "stationarity_residual",
    "solve_likelihood",
    "MaximumLikelihoodEstimator",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 5000
DEFAULT_INTENSITY_FLOOR = 1e-12
# Absolute slack when testing likelihood non-decrease; covers the float noise
# of summing ~1e5-scale terms without letting genuine cycles through.
LIKELIHOOD_SLACK = 1e-6
# Blend factor beyond which backtracking gives up for the current step.
MAX_DAMPING = 0.97


@dataclass(frozen=True)
class ReconstructionResult:
    """Estimated state plus convergence diagnostics."""

    amplitude: AmplitudeMatrix
    density: DensityMatrix
    iterations: int
    converged: bool
    final_residual: float
    log_likelihood: float


def _count_vector(counts, protocol: Protocol) -> tuple[np.ndarray, np.ndarray]:
    """Split counts input into (k, t); CountData carries its own exposures."""
    if isinstance(counts, CountData):
        if counts.n_rows != protocol.n_rows:
            raise ValueError(
                f"counts has {counts.n_rows} rows, protocol has {protocol.n_rows}"
            )
        return np.asarray(counts.counts, dtype=np.float64), counts.exposures
    k = check_counts(counts, protocol.n_rows)
    if not protocol.exposures_assigned:
        raise ValueError(
            "raw count vectors need a protocol with assigned exposures"
        )
    return k, protocol.exposures


def _row_intensities(matrix: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(matrix @ c) ** 2, axis=1)


def _log_likelihood_raw(lam, t, k, floor) -> float:
    """Poisson log-likelihood; zero-count rows contribute only -lambda t."""
    out = -float(np.sum(lam * t))
    pos = k > 0
    if np.any(pos):
        mu = np.maximum(lam[pos], floor) * t[pos]
        out += float(np.sum(k[pos] * np.log(mu)) - np.sum(gammaln(k[pos] + 1.0)))
    return out


def log_likelihood(counts, protocol: Protocol, amplitude: AmplitudeMatrix,
                   intensity_floor: float = DEFAULT_INTENSITY_FLOOR) -> float:
    """Poisson log-likelihood of the counts under the given state."""
    k, t = _count_vector(counts, protocol)
    if amplitude.dim != protocol.dim:
        raise ValueError(f"dimension mismatch: {amplitude.dim} vs {protocol.dim}")
    lam = _row_intensities(protocol.matrix, amplitude.matrix)
    return _log_likelihood_raw(lam, t, k, intensity_floor)


def likelihood_operators(counts, protocol: Protocol, amplitude: AmplitudeMatrix,
                         intensity_floor: float = DEFAULT_INTENSITY_FLOOR,
                         ) -> tuple[np.ndarray, np.ndarray]:
    """The exposure-weighted and count-weighted projector sums (A, B).

    A is state-independent; B reweights each row projector by
    ``k_j / lambda_j(c)``, with zero-count rows dropped and the intensity
    floored when ``k_j > 0``.
    """
    k, t = _count_vector(counts, protocol)
    if amplitude.dim != protocol.dim:
        raise ValueError(f"dimension mismatch: {amplitude.dim} vs {protocol.dim}")
    X = protocol.matrix
    lam = _row_intensities(X, amplitude.matrix)
    A = (X.conj().T * t) @ X
    w = np.where(k > 0, k / np.maximum(lam, intensity_floor), 0.0)
    B = (X.conj().T * w) @ X
    return A, B


def stationarity_residual(counts, protocol: Protocol, amplitude: AmplitudeMatrix,
                          intensity_floor: float = DEFAULT_INTENSITY_FLOOR) -> float:
    """Normalized stationarity defect ``|A c - B c|_F / |A c|_F``; 0 at a root."""
    A, B = likelihood_operators(counts, protocol, amplitude, intensity_floor)
    c = amplitude.matrix
    Ac = A @ c
    return float(np.linalg.norm(Ac - B @ c) / np.linalg.norm(Ac))


def _state_delta(c_old: np.ndarray, c_new: np.ndarray, rank: int) -> float:
    """Infidelity between the density matrices of two iterates."""
    if rank == 1:
        return 1.0 - min(1.0, abs(np.vdot(c_old[:, 0], c_new[:, 0])) ** 2)
    rho = DensityMatrix(c_old @ c_old.conj().T)
    sig = DensityMatrix(c_new @ c_new.conj().T)
    return 1.0 - fidelity_mixed(rho, sig)


def _initial_amplitude(dim: int, rank: int, seed: int) -> np.ndarray:
    """Seeded complex-Gaussian columns, orthonormalized, unit Frobenius norm."""
    rng = np.random.default_rng(seed & MASK64)
    raw = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    q, _ = np.linalg.qr(raw)
    return q / np.sqrt(rank)


def _solve_once(X, t, k, rank, seed, tol, max_iter, floor, apply_inv):
    """One fixed-point run; returns (c, iterations, converged, log_likelihood)."""
    dim = X.shape[1]
    c = _initial_amplitude(dim, rank, seed)
    lam = _row_intensities(X, c)
    ll = _log_likelihood_raw(lam, t, k, floor)
    damping = 0.0
    steps_since_backtrack = 0
    iterations = 0
    converged = False
    for iteration in range(max_iter):
        w = np.where(k > 0, k / np.maximum(lam, floor), 0.0)
        B = (X.conj().T * w) @ X
        plain = apply_inv(B @ c)
        plain = plain / np.linalg.norm(plain)
        # Likelihood-equation displacement, measured before any damping.
        delta = _state_delta(c, plain, rank)
        blend = damping
        while True:
            c_new = (1.0 - blend) * plain + blend * c if blend > 0 else plain
            c_new = c_new / np.linalg.norm(c_new)
            lam_new = _row_intensities(X, c_new)
            ll_new = _log_likelihood_raw(lam_new, t, k, floor)
            if ll_new >= ll - LIKELIHOOD_SLACK or blend > MAX_DAMPING:
                break
            blend = 0.5 if blend == 0.0 else (1.0 + blend) / 2.0
        if blend > damping:
            damping = blend
            steps_since_backtrack = 0
        else:
            steps_since_backtrack += 1
            if steps_since_backtrack >= 10 and damping > 0.0:
                damping = damping / 2.0 if damping > 0.1 else 0.0
                steps_since_backtrack = 0
        c, lam, ll = c_new, lam_new, ll_new
        iterations = iteration + 1
        if delta < tol:
            converged = True
            break
    return c, iterations, converged, ll


def solve_likelihood(counts, protocol: Protocol, rank: int = 1,
                     tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                     restarts: int = 1,
                     intensity_floor: float = DEFAULT_INTENSITY_FLOOR,
                     init_seed: int = 0) -> ReconstructionResult:
    """Maximum-likelihood reconstruction at the given model rank.

    Runs ``restarts`` independent fixed-point iterations (restart ``i`` seeds
    its start with ``init_seed + i``) and returns the one with the highest
    log-likelihood. ``converged`` is False when that run exhausted
    ``max_iter`` without the plain-step displacement dropping below ``tol``;
    the best iterate is still returned.
    """
    if not 1 <= rank <= protocol.dim:
        raise ValueError(f"rank must lie in [1, {protocol.dim}], got {rank}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if restarts < 1:
        raise ValueError(f"restarts must be at least 1, got {restarts}")
    completeness_factor(protocol)  # raises for incomplete protocols
    k, t = _count_vector(counts, protocol)
    X = protocol.matrix

    A = (X.conj().T * t) @ X
    scale = np.trace(A).real / protocol.dim
    if np.max(np.abs(A - scale * np.eye(protocol.dim))) <= 1e-10 * scale:
        # Uniform exposures make A = scale * identity; invert by division.
        def apply_inv(y):
            return y / scale
    else:
        lu = np.linalg.inv(A)

        def apply_inv(y):
            return lu @ y

    best = None
    for restart in range(restarts):
        c, iters, conv, ll = _solve_once(
            X, t, k, rank, init_seed + restart, tol, max_iter,
            intensity_floor, apply_inv,
        )
        if best is None or ll > best[3]:
            best = (c, iters, conv, ll)
    c, iters, conv, ll = best
    amplitude = AmplitudeMatrix(c)
    return ReconstructionResult(
        amplitude=amplitude,
        density=density_from_amplitude(amplitude),
        iterations=iters,
        converged=conv,
        final_residual=stationarity_residual(counts, protocol, amplitude,
                                             intensity_floor),
        log_likelihood=ll,
    )


class MaximumLikelihoodEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`solve_likelihood`.

    Parameters are stored verbatim at construction (so ``get_params`` /
    ``set_params`` and ``clone`` behave as usual) and validated in ``fit``.

    Attributes set by ``fit``: ``amplitude_``, ``density_``, ``n_iter_``,
    ``converged_``, ``residual_``, ``log_likelihood_`` and the full
    ``result_``.

    Example
    -------
    >>> protocol = assign_exposures(tensor_protocol([tetrahedron()] * 3), 1e5)
    >>> counts = draw_counts(protocol, density_from_amplitude(ghz(3)), seed=1)
    >>> est = MaximumLikelihoodEstimator(protocol, rank=1).fit(counts)
    >>> est.converged_
    True
    """

    def __init__(self, protocol: Protocol, rank: int = 1, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER, restarts: int = 1,
                 intensity_floor: float = DEFAULT_INTENSITY_FLOOR,
                 init_seed: int = 0):
        self.protocol = protocol
        self.rank = rank
        self.tol = tol
        self.max_iter = max_iter
        self.restarts = restarts
        self.intensity_floor = intensity_floor
        self.init_seed = init_seed

    def fit(self, counts, y=None):
        """Reconstruct the state from a CountData or raw count vector."""
        result = solve_likelihood(
            counts, self.protocol, rank=self.rank, tol=self.tol,
            max_iter=self.max_iter, restarts=self.restarts,
            intensity_floor=self.intensity_floor, init_seed=self.init_seed,
        )
        self.result_ = result
        self.amplitude_ = result.amplitude
        self.density_ = result.density
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.residual_ = result.final_residual
        self.log_likelihood_ = result.log_likelihood
        return self

    def score(self, counts, y=None) -> float:
        """Log-likelihood of counts under the fitted state."""
        if not hasattr(self, "amplitude_"):
            raise RuntimeError("estimator is not fitted")
        return log_likelihood(counts, self.protocol, self.amplitude_,
                              self.intensity_floor)

    def fidelity_with(self, state) -> float:
        """Fidelity between the fitted state and a reference state."""
        if not hasattr(self, "amplitude_"):
            raise RuntimeError("estimator is not fitted")
        if isinstance(state, AmplitudeMatrix) and state.rank == 1 and self.rank == 1:
            return fidelity_pure(self.amplitude_, state)
        from .states import as_density

        return fidelity_mixed(as_density(state), self.density_)
