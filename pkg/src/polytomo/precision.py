"""Theoretical accuracy of a protocol: information matrix and fidelity loss.

States are parametrized by the real vector ``theta = (Re vec c, Im vec c)``
of length ``2 s r`` (columns stacked). In these coordinates the Poisson
Fisher information of a protocol with exposures ``t_j`` is

    H = sum_j (t_j / lambda_j) g_j g_j^T,     g_j = grad lambda_j(theta),

where ``g_j = 2 (Re vec(P_j c), Im vec(P_j c))`` for the row projector
``P_j``. For a complete protocol H has exactly ``r**2`` zero eigenvalues
(the gauge directions ``c -> c U``); the remaining ``(2s - r) r`` are
strictly positive.

Around the true state, ``1 - F`` is a quadratic form ``delta^T B delta`` in
the estimation error. With ``Sigma`` the pseudo-inverse of H (the asymptotic
covariance of the estimator), the infidelity is asymptotically distributed as

    1 - F = sum_j d_j xi_j**2,   xi_j ~ N(0, 1) iid,

where the ``d_j`` are the nonzero eigenvalues of
``Sigma^(1/2) B Sigma^(1/2)``; their count equals the number of physical
degrees of freedom ``nu = (2s - r) r - 1``. The mean infidelity is
``sum d_j`` and the scaled loss ``L = n sum d_j`` is independent of the
sample size ``n``; for pure states ``L >= s - 1`` with equality attainable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import DegeneratePrecisionModelError
from .protocols import Protocol, completeness_factor, intensities
from .states import AmplitudeMatrix, DensityMatrix, fidelity_mixed, purify
from .validation import readonly

__all__ = [
    "InformationMatrix",
    "LossModel",
    "information_matrix",
    "fidelity_hessian",
    "pure_state_hessian",
    "loss_coefficients",
    "loss_model",
    "loss_distribution_samples",
    "minimal_loss",
    "maximize_loss",
]

# Relative thresholds separating zero from positive eigenvalues.
H_NULL_RTOL = 1e-8
D_NULL_RTOL = 1e-10
FD_STEP = 1e-4
# Rows with intensity below this are skipped when accumulating H: their
# expected counts and intensity gradients both vanish.
INTENSITY_SKIP = 1e-12


def real_embedding(c: np.ndarray) -> np.ndarray:
    """Map a complex s x r matrix to (Re vec c, Im vec c), columns stacked."""
    v = c.flatten(order="F")
    return np.concatenate([v.real, v.imag])


def complex_from_real(theta: np.ndarray, dim: int, rank: int) -> np.ndarray:
    half = theta.size // 2
    return (theta[:half] + 1j * theta[half:]).reshape((dim, rank), order="F")


@dataclass(frozen=True)
class InformationMatrix:
    """Fisher information in the real state parametrization."""

    matrix: np.ndarray
    dim: int
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "matrix", readonly(self.matrix))

    @property
    def positive_count(self) -> int:
        """Expected number of strictly positive eigenvalues, (2s - r) r."""
        return (2 * self.dim - self.rank) * self.rank


@dataclass(frozen=True)
class LossModel:
    """Chi-square mixture law of the fidelity loss.

    ``coefficients`` are the d_j in decreasing order; ``mean_loss`` is their
    sum (the asymptotic mean of 1 - F) and ``scaled_loss`` multiplies it by
    the expected sample size when one is known.
    """

    coefficients: np.ndarray
    dof: int
    mean_loss: float
    sample_size: float | None = None
    scaled_loss: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", readonly(self.coefficients))


def information_matrix(protocol: Protocol, amplitude: AmplitudeMatrix) -> InformationMatrix:
    """Poisson Fisher information of a complete protocol at a state."""
    completeness_factor(protocol)  # raises for incomplete protocols
    if not protocol.exposures_assigned:
        raise ValueError("information matrix needs a protocol with exposures")
    if amplitude.dim != protocol.dim:
        raise ValueError(f"dimension mismatch: {amplitude.dim} vs {protocol.dim}")
    X = protocol.matrix
    c = amplitude.matrix
    dim, rank = c.shape
    W = X @ c                                  # row amplitudes, one per column
    lam = np.sum(np.abs(W) ** 2, axis=1)
    keep = lam > INTENSITY_SKIP
    # Row j of V holds vec(P_j c): P_j c = conj(row_j) (row_j . c).
    weights = protocol.exposures[keep] / lam[keep]
    Xk = X[keep].conj()
    Wk = W[keep]
    V = np.einsum("ms,mr->mrs", Wk, Xk).reshape(Wk.shape[0], -1, order="C")
    # V rows are vec(P_j c) in column-stacked order: entry (k, l) of P_j c is
    # conj(X[j,k]) W[j,l]; flatten order F over (k,l) = C-order over (l,k).
    G = 2.0 * np.concatenate([V.real, V.imag], axis=1)
    H = (G * weights[:, None]).T @ G
    return InformationMatrix(matrix=H, dim=dim, rank=rank)


def pure_state_hessian(amplitude: AmplitudeMatrix) -> np.ndarray:
    """Closed-form quadratic form of 1 - F around a pure state.

    For unit vectors, 1 - F equals the squared norm of the deviation
    orthogonal to both the radial direction (normalization) and the phase
    direction, so B is the projector onto that orthogonal complement.
    """
    if amplitude.rank != 1:
        raise ValueError("closed form only applies to rank-1 states")
    u = real_embedding(amplitude.matrix)
    v = real_embedding(1j * amplitude.matrix)
    return np.eye(u.size) - np.outer(u, u) - np.outer(v, v)


def fidelity_hessian(amplitude: AmplitudeMatrix, step: float = FD_STEP,
                     method: str = "fd") -> np.ndarray:
    """Quadratic form B with ``1 - F(rho(c), rho(c + delta)) ~ delta^T B delta``.

    method="fd" (default): second-order central differences with the
    polarization identity for off-diagonal entries; the perturbed amplitude is
    renormalized before comparing, and the radial direction is deflated
    exactly since renormalization makes the loss flat along it (finite
    differences would otherwise leave O(step) noise there and leak a spurious
    loss coefficient). method="exact" uses the rank-1 closed form.
    """
    if method == "exact":
        return pure_state_hessian(amplitude)
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    c = amplitude.matrix
    dim, rank = c.shape
    size = 2 * dim * rank
    rho_ref = DensityMatrix(c @ c.conj().T)
    pure = rank == 1
    ref_vec = c[:, 0] if pure else None

    def infidelity(theta: np.ndarray) -> float:
        cd = c + complex_from_real(theta, dim, rank)
        cd = cd / np.linalg.norm(cd)
        if pure:
            return 1.0 - min(1.0, abs(np.vdot(ref_vec, cd[:, 0])) ** 2)
        return 1.0 - fidelity_mixed(rho_ref, DensityMatrix(cd @ cd.conj().T))

    # Central symmetrized values S(v) = (f(h v) + f(-h v)) / 2 = h^2 v^T B v.
    basis = np.eye(size)
    h2 = step * step
    diag = np.empty(size)
    for i in range(size):
        e = step * basis[i]
        diag[i] = (infidelity(e) + infidelity(-e)) / (2.0 * h2)
    B = np.diag(diag)
    for i in range(size):
        for j in range(i + 1, size):
            e = step * (basis[i] + basis[j])
            pair = (infidelity(e) + infidelity(-e)) / (2.0 * h2)
            B[i, j] = B[j, i] = (pair - diag[i] - diag[j]) / 2.0
    B = (B + B.T) / 2.0
    radial = real_embedding(c)
    radial = radial / np.linalg.norm(radial)
    P = np.eye(size) - np.outer(radial, radial)
    return P @ B @ P


def loss_coefficients(info: InformationMatrix, hessian: np.ndarray,
                      sample_size: float | None = None) -> LossModel:
    """Loss coefficients d_j from the information matrix and loss Hessian.

    Eigenvalues of ``Sigma^(1/2) B Sigma^(1/2)`` with ``Sigma = pinv(H)``;
    values below ``1e-10`` of the largest are discarded and the surviving
    count must equal ``nu = (2s - r) r - 1``.
    """
    H = info.matrix
    if hessian.shape != H.shape:
        raise ValueError(f"shape mismatch: H {H.shape} vs B {hessian.shape}")
    evals, evecs = np.linalg.eigh(H)
    top = evals[-1]
    if top <= 0:
        raise DegeneratePrecisionModelError("information matrix is zero")
    positive = evals > H_NULL_RTOL * top
    inv_sqrt = np.where(positive, 1.0 / np.sqrt(np.where(positive, evals, 1.0)), 0.0)
    sigma_half = (evecs * inv_sqrt) @ evecs.T
    mixed = sigma_half @ hessian @ sigma_half
    d = np.linalg.eigvalsh((mixed + mixed.T) / 2.0)
    d = d[d > D_NULL_RTOL * max(d[-1], 0.0)][::-1]
    dof = info.positive_count - 1
    if d.size != dof:
        raise DegeneratePrecisionModelError(
            f"got {d.size} loss coefficients, model has {dof} degrees of freedom"
        )
    mean = float(d.sum())
    return LossModel(
        coefficients=d,
        dof=dof,
        mean_loss=mean,
        sample_size=sample_size,
        scaled_loss=None if sample_size is None else float(sample_size * mean),
    )


def _uniform_sample_size(protocol: Protocol) -> float:
    """Expected event total n = a * t for uniform exposures."""
    t = protocol.exposures
    if np.max(t) - np.min(t) > 1e-9 * np.max(t):
        raise ValueError("sample size inference needs uniform exposures")
    return float(completeness_factor(protocol) * t[0])


def loss_model(protocol: Protocol, state, rank: int | None = None,
               hessian_method: str = "fd") -> LossModel:
    """LossModel of a protocol at a true state.

    ``state`` may be an amplitude or a density matrix; density matrices are
    purified at the requested model rank (default: full rank for mixtures,
    rank 1 for amplitudes of rank 1).
    """
    if isinstance(state, DensityMatrix):
        amplitude = purify(state, rank if rank is not None else state.dim)
    elif isinstance(state, AmplitudeMatrix):
        amplitude = state
        if rank is not None and rank != state.rank:
            amplitude = purify(
                DensityMatrix(state.matrix @ state.matrix.conj().T), rank
            )
    else:
        raise TypeError(f"expected AmplitudeMatrix or DensityMatrix, got {type(state)!r}")
    info = information_matrix(protocol, amplitude)
    B = fidelity_hessian(amplitude, method=hessian_method)
    return loss_coefficients(info, B, sample_size=_uniform_sample_size(protocol))


def loss_distribution_samples(model: LossModel, count: int, seed: int) -> np.ndarray:
    """Monte Carlo draws of ``sum_j d_j xi_j**2`` with standard normal xi."""
    if count < 1:
        raise ValueError(f"sample count must be at least 1, got {count}")
    rng = np.random.default_rng(seed)
    out = np.zeros(count)
    for d in model.coefficients:
        out += d * rng.standard_normal(count) ** 2
    return out


def minimal_loss(dim: int) -> float:
    """Smallest scaled loss any complete protocol can reach on a pure state."""
    if dim < 2:
        raise ValueError(f"dimension must be at least 2, got {dim}")
    return float(dim - 1)


def _loss_objective(protocol: Protocol, n: float):
    """Fast scaled-loss evaluator over real coordinates of a pure state.

    Uses the closed-form pure-state Hessian (finite differences agree with it
    to the tested tolerance but cost ~500 fidelity evaluations per point,
    which would dominate the optimizer budget). Returns None at coordinates
    where the precision model degenerates.
    """
    X = protocol.matrix
    t = protocol.exposures
    dim = protocol.dim
    Xc = X.conj()
    dof = 2 * dim - 2

    def objective(theta: np.ndarray) -> float | None:
        c = theta[:dim] + 1j * theta[dim:]
        norm = np.linalg.norm(c)
        if norm < 1e-8:
            return None
        c = c / norm
        W = X @ c
        lam = np.abs(W) ** 2
        keep = lam > INTENSITY_SKIP
        V = Xc[keep] * W[keep, None]
        G = 2.0 * np.concatenate([V.real, V.imag], axis=1)
        H = (G * (t[keep] / lam[keep])[:, None]).T @ G
        evals, evecs = np.linalg.eigh(H)
        top = evals[-1]
        positive = evals > H_NULL_RTOL * top
        if int((~positive).sum()) != 1:
            return None
        inv_sqrt = np.where(positive, 1.0 / np.sqrt(np.where(positive, evals, 1.0)), 0.0)
        s_half = (evecs * inv_sqrt) @ evecs.T
        u = np.concatenate([c.real, c.imag])
        v = np.concatenate([-c.imag, c.real])
        # M = S B S with S = Sigma^(1/2), B = I - uu^T - vv^T (rank-1 closed form)
        su = s_half @ u
        sv = s_half @ v
        sigma = (evecs * np.where(positive, 1.0 / np.where(positive, evals, 1.0), 0.0)) @ evecs.T
        M = sigma - np.outer(su, su) - np.outer(sv, sv)
        d = np.linalg.eigvalsh((M + M.T) / 2.0)
        d = d[d > D_NULL_RTOL * max(d[-1], 0.0)]
        if d.size != dof:
            return None
        return float(n * d.sum())

    return objective


def maximize_loss(protocol: Protocol, n: float, starts: int = 64,
                  max_evals: int = 2000, seed: int = 2024,
                  ) -> tuple[AmplitudeMatrix, float]:
    """Worst-case scaled loss over pure states by multi-start Nelder-Mead.

    Deterministic for fixed (starts, max_evals, seed): start ``i`` draws its
    Haar-random initial state from ``seed + i`` and ties keep the earliest
    start. Uses adaptive simplex parameters, which the 2s-dimensional search
    needs to converge within the evaluation budget.
    """
    if not protocol.exposures_assigned:
        protocol = _with_uniform_exposures(protocol, n)
    objective = _loss_objective(protocol, n)
    dim = protocol.dim

    def negative(theta: np.ndarray) -> float:
        value = objective(theta)
        return np.inf if value is None else -value

    best_value = -np.inf
    best_theta = None
    for start in range(starts):
        rng = np.random.default_rng(seed + start)
        c0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        c0 = c0 / np.linalg.norm(c0)
        result = minimize(
            negative,
            np.concatenate([c0.real, c0.imag]),
            method="Nelder-Mead",
            options=dict(maxfev=max_evals, xatol=1e-6, fatol=1e-8, adaptive=True),
        )
        if -result.fun > best_value:
            best_value = -result.fun
            best_theta = result.x
    if best_theta is None:
        raise DegeneratePrecisionModelError("no optimizer start produced a valid loss")
    c = complex_from_real(best_theta, dim, 1)
    c = c / np.linalg.norm(c)
    return AmplitudeMatrix(c), float(best_value)


def _with_uniform_exposures(protocol: Protocol, n: float) -> Protocol:
    from .protocols import assign_exposures

    return assign_exposures(protocol, n)
