"""Per-channel solver: closed-form precoding plus projected-gradient phase tuning.

For one channel realization and a fixed scattering state the solver
alternates two steps until the total MSE stalls:

1. the exact minimizer of ||rho * Heff @ F - I||_F^2 + K rho^2 sigma_w^2
   over (F, rho) subject to ||F||_F^2 = P, obtained from the regularized
   least-squares solution G = Heff^H (Heff Heff^H + (K sigma_w^2 / P) I)^-1
   with rho = ||G||_F / sqrt(P) and F = G / rho;
2. one projected-gradient step on the unit-modulus port loads with
   backtracking, so the MSE never increases.

Gradients with respect to the loads follow the Wirtinger convention in
which a perturbation delta changes the objective by 2*Re{sum_m g[m]^* delta[m]}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSample
from .errors import SingularMatrixError
from .linalg import invert
from .scattering import (
    PhaseConfig,
    ReflectiveScattering,
    TransmissiveScattering,
    reflective_matrices,
)

_MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class InnerConfig:
    """Stopping and step-size parameters of the alternating solver."""

    max_iters: int = 200
    tol: float = 1e-6
    phase_step: float = 0.1
    backtrack: float = 0.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.phase_step <= 0:
            raise ValueError("phase_step must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")


@dataclass(frozen=True)
class PrecoderSolution:
    """Transmit precoder with scaling and the metrics achieved by it."""

    F: np.ndarray
    rho: float
    mse: float
    per_user_mmse: np.ndarray
    sum_rate: float


def optimal_precoder(h_eff: np.ndarray, P: float, sigma_w2: float, K: int):
    """Exact minimizer (F, rho) of the scaled-MSE objective under ||F||_F^2 = P."""
    gram = h_eff @ h_eff.conj().T + (K * sigma_w2 / P) * np.eye(K)
    g = h_eff.conj().T @ invert(gram)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        raise SingularMatrixError("effective channel is zero; precoder undefined")
    rho = gnorm / np.sqrt(P)
    return g / rho, rho


def total_mse(h_eff: np.ndarray, F: np.ndarray, rho: float, sigma_w2: float, K: int) -> float:
    """||rho * Heff @ F - I_K||_F^2 + K rho^2 sigma_w^2."""
    resid = rho * (h_eff @ F) - np.eye(K)
    return float(np.sum(np.abs(resid) ** 2) + K * rho**2 * sigma_w2)


def per_user_mmse(h_eff: np.ndarray, F: np.ndarray, rho: float, sigma_w2: float) -> np.ndarray:
    """Row-wise split of the total MSE: per user k the squared residual of its
    equalized symbol plus the scaled noise power."""
    k = h_eff.shape[0]
    resid = rho * (h_eff @ F) - np.eye(k)
    return np.sum(np.abs(resid) ** 2, axis=1) + rho**2 * sigma_w2


def sum_rate(mmse: np.ndarray) -> float:
    """Achievable sum rate sum_k log2(1/MMSE_k), per-user terms floored at zero.

    An MMSE above one would give a negative rate, which is not physical; the
    corresponding user simply contributes nothing.
    """
    mmse = np.asarray(mmse, dtype=float)
    if np.any(mmse <= 0):
        raise ValueError(f"per-user MMSE must be positive, got {mmse}")
    return float(np.sum(np.maximum(0.0, -np.log2(mmse))))


class _ReflectiveChain:
    """Precomputed channel/scattering products for the reflective load search."""

    def __init__(self, sample: ChannelSample, rs: ReflectiveScattering):
        s_aa, s_ab = reflective_matrices(rs)
        self.s_aa = s_aa
        self.left = sample.H_ru.conj().T @ s_ab.T   # K x M
        self.right = s_ab @ sample.H_br             # M x N
        self._resolvent = None

    def h_eff(self, upsilon: np.ndarray) -> np.ndarray:
        t = np.diag(1.0 / upsilon) - self.s_aa
        self._resolvent = invert(t)
        return (self.left @ self._resolvent) @ self.right

    def gradient(self, upsilon, F, rho, h_eff):
        err = rho * (h_eff @ F) - np.eye(h_eff.shape[0])
        la = self.left @ self._resolvent                     # K x M
        rb = self._resolvent @ (self.right @ F)              # M x K
        dfdu = rho * upsilon**-2 * np.einsum("mk,km->m", rb, err.conj().T @ la)
        return dfdu.conj()


class _TransmissiveChain:
    """Precomputed products for the transmissive load search (no resolvent)."""

    def __init__(self, sample: ChannelSample, ts: TransmissiveScattering):
        self.left = sample.H_ru.conj().T @ ts.s2    # K x M
        self.right = ts.s1 @ sample.H_br            # M x N

    def h_eff(self, upsilon: np.ndarray) -> np.ndarray:
        return (self.left * upsilon) @ self.right

    def gradient(self, upsilon, F, rho, h_eff):
        err = rho * (h_eff @ F) - np.eye(h_eff.shape[0])
        bf = self.right @ F                                   # M x K
        dfdu = rho * np.einsum("mk,km->m", bf, err.conj().T @ self.left)
        return dfdu.conj()


def _chain(sample, state):
    if isinstance(state, ReflectiveScattering):
        return _ReflectiveChain(sample, state)
    if isinstance(state, TransmissiveScattering):
        return _TransmissiveChain(sample, state)
    raise TypeError(f"unsupported scattering state {type(state).__name__}")


def phase_gradient(
    h_ru: np.ndarray,
    h_br: np.ndarray,
    state,
    ph: PhaseConfig,
    F: np.ndarray,
    rho: float,
) -> np.ndarray:
    """Wirtinger gradient of the total MSE with respect to the port loads.

    Returned so that a load perturbation delta changes the objective by
    2*Re{sum_m g[m]^* delta[m]}; the noise term of the MSE does not depend
    on the loads and drops out.
    """
    chain = _chain(ChannelSample(H_br=h_br, H_ru=h_ru), state)
    h_eff = chain.h_eff(ph.upsilon)
    return chain.gradient(ph.upsilon, F, rho, h_eff)


def optimize_inner(
    sample: ChannelSample,
    state,
    cfg: InnerConfig,
    P: float,
    sigma_w2: float,
    rng: np.random.Generator,
    mse_trace: list | None = None,
    init_phases: PhaseConfig | None = None,
) -> tuple[PhaseConfig, PrecoderSolution]:
    """Alternate exact precoding and backtracked phase steps until the MSE stalls.

    Loads start at uniform random phases drawn from rng, or at init_phases
    when given (used to warm-start repeated solves of the same channel).
    Every accepted iterate keeps ||F||_F^2 = P and unit-modulus loads; the
    recorded MSE sequence is non-increasing. Singular configurations raise
    SingularMatrixError.
    """
    k = sample.H_ru.shape[1]
    chain = _chain(sample, state)
    if init_phases is None:
        upsilon = np.exp(2j * np.pi * rng.random(state.M))
    else:
        upsilon = np.asarray(init_phases.upsilon, dtype=complex).copy()
    h_eff = chain.h_eff(upsilon)
    F, rho = optimal_precoder(h_eff, P, sigma_w2, k)
    mse = total_mse(h_eff, F, rho, sigma_w2, k)
    if mse_trace is not None:
        mse_trace.append(mse)

    # Candidate loads are scored after re-solving the precoder, so the
    # backtracking descends the envelope min_{F,rho} MSE(loads); the
    # gradient at the freshly solved precoder is the envelope gradient.
    step = cfg.phase_step
    for _ in range(cfg.max_iters):
        grad = chain.gradient(upsilon, F, rho, h_eff)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            cand = upsilon - step * grad
            mag = np.abs(cand)
            cand = np.where(mag > 0, cand / np.where(mag > 0, mag, 1.0), upsilon)
            h_cand = chain.h_eff(cand)
            f_cand, rho_cand = optimal_precoder(h_cand, P, sigma_w2, k)
            mse_cand = total_mse(h_cand, f_cand, rho_cand, sigma_w2, k)
            if mse_cand <= mse:
                improved = mse - mse_cand
                upsilon, h_eff, F, rho, mse = cand, h_cand, f_cand, rho_cand, mse_cand
                accepted = True
                step = min(step * 2.0, 1e6)
                if mse_trace is not None:
                    mse_trace.append(mse)
                if improved <= cfg.tol * max(mse, 1e-300):
                    return _finish(upsilon, h_eff, F, rho, sigma_w2, k)
                break
            step *= cfg.backtrack
        if not accepted:
            # Stationary at the backtracking resolution.
            break

    return _finish(upsilon, h_eff, F, rho, sigma_w2, k)


def _finish(upsilon, h_eff, F, rho, sigma_w2, k):
    mmse = per_user_mmse(h_eff, F, rho, sigma_w2)
    solution = PrecoderSolution(
        F=F,
        rho=rho,
        mse=total_mse(h_eff, F, rho, sigma_w2, k),
        per_user_mmse=mmse,
        sum_rate=sum_rate(mmse),
    )
    return PhaseConfig(upsilon), solution
