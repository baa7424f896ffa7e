"""Shared independent oracles: finite differences and feasible random states."""

import numpy as np

from rismc.channel import ChannelSample, crandn
from rismc.linalg import project_unitary, two_dft
from rismc.scattering import (
    ReflectiveScattering,
    TransmissiveScattering,
    project_lossless,
    symmetrize,
)


def fd_gradient_vector(fun, x, h=1e-6):
    """Central-difference gradient of a real function of a complex vector,
    returned as d/dRe + i*d/dIm per entry."""
    grad = np.zeros(x.shape, dtype=complex)
    flat = x.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        for direction, weight in ((1.0, 1.0), (1j, 1j)):
            xp = flat.copy()
            xm = flat.copy()
            xp[i] += h * direction
            xm[i] -= h * direction
            out[i] += weight * (fun(xp.reshape(x.shape)) - fun(xm.reshape(x.shape))) / (2 * h)
    return grad


def cosine_similarity(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    return float(np.abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def random_feasible_reflective(m, rng, coupling=0.4):
    """Symmetrized, power-conserving random reflective state."""
    sigma_aa = symmetrize(coupling * np.exp(2j * np.pi * rng.random(m)))
    sigma_ab = symmetrize(np.exp(2j * np.pi * rng.random(m)))
    sigma_aa, sigma_ab = project_lossless(sigma_aa, sigma_ab)
    return ReflectiveScattering(sigma_aa, sigma_ab, two_dft(m))


def random_transmissive(m, rng):
    return TransmissiveScattering(
        s1=project_unitary(crandn(rng, m, m)),
        s2=project_unitary(crandn(rng, m, m)),
    )


def random_sample(m, n, k, rng):
    return ChannelSample(H_br=crandn(rng, m, n), H_ru=crandn(rng, m, k))
