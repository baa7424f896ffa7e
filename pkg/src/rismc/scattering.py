"""Scattering-parameter states for both RIS types and their constraint handling.

Reflective surfaces are described by two diagonal spectra in a fixed
two-dimensional DFT frame W (= D kron D): the port-side coupling
S_aa = W diag(sigma_aa) W^H and the receive pattern
S_ab = W diag(sigma_ab) W^H, with the transmit pattern tied by reciprocity
to S_ba = S_ab^T. Power conservation requires
|sigma_aa[i]|^2 + |sigma_ab[i]|^2 = 1 per index, and reciprocity of S_aa
requires the spectra to be invariant under the two-dimensional reversal
pairing (the permutation W @ W).

Transmissive surfaces carry two unitary radiation-pattern matrices s1
(receive side) and s2 (transmit side) with no port-side coupling.

Constructors do not enforce feasibility; ``check_constraints`` measures the
violation of each constraint and the projections restore feasibility. All
functions are pure and states are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import (
    invert,
    pairing_indices,
    project_unitary,
    two_dft,
    unitarity_residual,
)

__all__ = [
    "PhaseConfig",
    "ReflectiveScattering",
    "TransmissiveScattering",
    "random_phases",
    "conventional_reflective",
    "identity_transmissive",
    "reflective_matrices",
    "effective_reflective",
    "neumann_partial",
    "effective_transmissive",
    "end_to_end",
    "symmetrize",
    "project_lossless",
    "project_unitary",
    "check_constraints",
]


@dataclass(frozen=True)
class PhaseConfig:
    """Tunable port loads: the diagonal of the load matrix, unit modulus each."""

    upsilon: np.ndarray


@dataclass(frozen=True)
class ReflectiveScattering:
    """Diagonal spectra of the coupling and pattern matrices in the frame W."""

    sigma_aa: np.ndarray
    sigma_ab: np.ndarray
    frame: np.ndarray

    @property
    def M(self) -> int:
        return self.sigma_aa.shape[0]


@dataclass(frozen=True)
class TransmissiveScattering:
    """Receive (s1) and transmit (s2) radiation-pattern matrices, unitary."""

    s1: np.ndarray
    s2: np.ndarray

    @property
    def M(self) -> int:
        return self.s1.shape[0]


def random_phases(m: int, rng: np.random.Generator) -> PhaseConfig:
    """Uniform random unit-modulus loads."""
    return PhaseConfig(np.exp(2j * np.pi * rng.random(m)))


def conventional_reflective(m: int) -> ReflectiveScattering:
    """No coupling, fully transparent pattern: sigma_aa = 0, sigma_ab = 1."""
    return ReflectiveScattering(
        sigma_aa=np.zeros(m, dtype=complex),
        sigma_ab=np.ones(m, dtype=complex),
        frame=two_dft(m),
    )


def identity_transmissive(m: int) -> TransmissiveScattering:
    """Identity radiation patterns; the surface reduces to the bare phase loads."""
    eye = np.eye(m, dtype=complex)
    return TransmissiveScattering(s1=eye, s2=eye.copy())


def reflective_matrices(rs: ReflectiveScattering) -> tuple[np.ndarray, np.ndarray]:
    """Materialize (S_aa, S_ab) = (W diag(sigma_aa) W^H, W diag(sigma_ab) W^H)."""
    wh = rs.frame.conj().T
    s_aa = (rs.frame * rs.sigma_aa) @ wh
    s_ab = (rs.frame * rs.sigma_ab) @ wh
    return s_aa, s_ab


def effective_reflective(rs: ReflectiveScattering, ph: PhaseConfig) -> np.ndarray:
    """Effective wave transformation S_ba (Y^-1 - S_aa)^-1 S_ab of the loaded surface.

    Y is the diagonal load matrix and S_ba = S_ab^T by reciprocity. Raises
    SingularMatrixError when the multiple-reflection resolvent does not exist.
    """
    s_aa, s_ab = reflective_matrices(rs)
    t = np.diag(1.0 / ph.upsilon) - s_aa
    return s_ab.T @ invert(t) @ s_ab


def neumann_partial(rs: ReflectiveScattering, ph: PhaseConfig, order: int) -> np.ndarray:
    """Partial sum sum_{l=0..order} (Y S_aa)^l Y of the multiple-reflection series.

    Converges to (Y^-1 - S_aa)^-1 when the spectral radius of Y S_aa is
    below one; each term adds one more bounce between surface and loads.
    """
    s_aa, _ = reflective_matrices(rs)
    y = np.diag(ph.upsilon)
    b = ph.upsilon[:, None] * s_aa
    acc = y.copy()
    term = y
    for _ in range(order):
        term = b @ term
        acc += term
    return acc


def effective_transmissive(ts: TransmissiveScattering, ph: PhaseConfig) -> np.ndarray:
    """Effective wave transformation s2 Y s1; unitary for feasible inputs."""
    return ts.s2 @ (ph.upsilon[:, None] * ts.s1)


def end_to_end(h_ru: np.ndarray, phi: np.ndarray, h_br: np.ndarray) -> np.ndarray:
    """Composite K x N downlink channel H_ru^H Phi H_br."""
    return h_ru.conj().T @ phi @ h_br


def symmetrize(sigma: np.ndarray) -> np.ndarray:
    """Average a spectrum over the orbits of the two-dimensional reversal pairing.

    Flattened entry (p, q) is paired with ((m-p) mod m, (m-q) mod m); both
    members of each pair are replaced by their mean. The output commutes
    with the reversal permutation, which makes W diag(sigma) W^H symmetric.
    Idempotent, and norm-non-increasing because orbit averaging contracts.
    """
    sigma = np.asarray(sigma)
    pairing = pairing_indices(sigma.shape[0])
    return 0.5 * (sigma + sigma[pairing])


def project_lossless(
    sigma_aa_t: np.ndarray, sigma_ab_t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form projection onto |sigma_aa[i]|^2 + |sigma_ab[i]|^2 = 1.

    Each pair is scaled by 1/sqrt(|aa|^2 + |ab|^2), which preserves both
    phases. A pair that is exactly zero has no unique nearest feasible
    point; it is mapped to the fully transparent element (0, 1).
    """
    sigma_aa_t = np.asarray(sigma_aa_t, dtype=complex)
    sigma_ab_t = np.asarray(sigma_ab_t, dtype=complex)
    norm = np.sqrt(np.abs(sigma_aa_t) ** 2 + np.abs(sigma_ab_t) ** 2)
    degenerate = norm == 0.0
    safe = np.where(degenerate, 1.0, norm)
    sigma_aa = np.where(degenerate, 0.0, sigma_aa_t / safe)
    sigma_ab = np.where(degenerate, 1.0, sigma_ab_t / safe)
    return sigma_aa, sigma_ab


def _pairing_violation(sigma: np.ndarray) -> float:
    pairing = pairing_indices(sigma.shape[0])
    return float(np.abs(sigma - sigma[pairing]).max())


def check_constraints(state) -> dict[str, float]:
    """Max violation of each feasibility constraint of the given state.

    Returns non-negative reals keyed by constraint name; all (near) zero for
    a feasible state.
    """
    if isinstance(state, PhaseConfig):
        return {"unit_modulus": float(np.abs(np.abs(state.upsilon) - 1.0).max())}
    if isinstance(state, ReflectiveScattering):
        power = np.abs(state.sigma_aa) ** 2 + np.abs(state.sigma_ab) ** 2
        return {
            "losslessness": float(np.abs(power - 1.0).max()),
            "symmetry": max(
                _pairing_violation(state.sigma_aa), _pairing_violation(state.sigma_ab)
            ),
            "frame_unitarity": unitarity_residual(state.frame),
        }
    if isinstance(state, TransmissiveScattering):
        return {
            "unitarity_s1": unitarity_residual(state.s1),
            "unitarity_s2": unitarity_residual(state.s2),
        }
    raise DimensionError(f"unsupported state type {type(state).__name__}")
