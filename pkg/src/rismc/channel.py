"""Seeded random channel generation for the RIS-assisted downlink.

Two generators are provided:

* ``gen_parametric`` draws a fixed number of propagation paths with uniform
  random angles (azimuth on [0, 2*pi), elevation on [0, pi)) and standard
  complex normal path gains.
* ``gen_geometric`` places ``num_bs`` base stations uniformly on a circle
  around the RIS and users uniformly in an annulus, with one path per
  BS-RIS / RIS-user pair whose angles follow from the positions.

Array conventions (half-wavelength spacing throughout):

* BS: uniform linear array along the x axis, entry n = exp(i*pi*n*sin(phi)).
* RIS: square uniform planar array, element (p, q) flattened row-major,
  entry = exp(i*pi*(p*sin(phi)*cos(psi) + q*sin(phi)*sin(psi))) where phi is
  the polar angle off the array normal and psi the azimuth.

Randomness: every stream is a PCG64 generator derived from
``SeedSequence([seed, *path])``. Batch generation splits one stream per
sample index, so samples are independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, GenerationError

# Cap on redraws when a channel draw violates the rank requirement.
MAX_REDRAWS = 100


def substream(seed: int, *path: int) -> np.random.Generator:
    """Deterministic child generator for (seed, *path)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Standard complex normal draws, unit variance per entry."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical scenario: dimensions, power budget and propagation constants.

    Distances in meters, powers in watts, path-loss reference C0 linear.
    eta_direct is kept for completeness but unused: the direct BS-user link
    is treated as blocked.
    """

    N: int
    M: int
    K: int
    P: float
    noise_var: float
    Q_br: int = 8
    Q_ru: int = 2
    d_ris: float = 500.0
    d_user_range: tuple[float, float] = (10.0, 50.0)
    C0: float = 1e-3
    d0: float = 1.0
    eta: float = 2.5
    eta_direct: float = 3.7
    num_bs: int = 4
    seed: int = 0
    geo_elevation: float = 0.0

    def __post_init__(self):
        if self.K > self.N:
            raise ConfigError(f"user count K={self.K} must not exceed BS antennas N={self.N}")
        if self.M < self.K:
            raise ConfigError(f"RIS size M={self.M} must be at least the user count K={self.K}")
        m = math.isqrt(self.M)
        if m * m != self.M:
            raise ConfigError(f"M must be a perfect square (planar RIS), got {self.M}")
        for name in ("P", "noise_var", "d_ris", "C0", "d0"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        lo, hi = self.d_user_range
        if not (0 < lo <= hi):
            raise ConfigError(f"d_user_range must satisfy 0 < min <= max, got {self.d_user_range}")
        if self.Q_br < 1 or self.Q_ru < 1:
            raise ConfigError("path counts Q_br and Q_ru must be >= 1")
        if self.num_bs < 1:
            raise ConfigError("num_bs must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class ChannelSample:
    """One realization: H_br (M x N, BS to RIS) and H_ru (M x K, RIS to users).

    Generators guarantee rank(H_br) >= K and finite entries.
    """

    H_br: np.ndarray
    H_ru: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.H_br).all() and np.isfinite(self.H_ru).all()):
            raise GenerationError("channel sample contains non-finite entries")
        if self.H_br.shape[0] != self.H_ru.shape[0]:
            raise DimensionError(
                f"H_br and H_ru disagree on RIS size: {self.H_br.shape} vs {self.H_ru.shape}"
            )


def path_loss(d: float, C0: float, d0: float, eta: float) -> float:
    """Distance-dependent attenuation C0 * (d/d0)^(-eta), strictly decreasing in d."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return C0 * (d / d0) ** (-eta)


def _ula(spatial_freq: float | np.ndarray, n: int) -> np.ndarray:
    """ULA response for sin(angle) = spatial_freq, half-wavelength spacing."""
    return np.exp(1j * np.pi * np.arange(n) * spatial_freq)


def steering_bs(phi: float, n: int) -> np.ndarray:
    """BS array response, entry n = exp(i*pi*n*sin(phi))."""
    if n < 1:
        raise DimensionError(f"array size must be >= 1, got {n}")
    return _ula(np.sin(phi), n)


def steering_ris(phi: float, psi: float, m_total: int) -> np.ndarray:
    """Planar RIS response for polar angle phi and azimuth psi, flattened row-major."""
    m = math.isqrt(m_total)
    if m * m != m_total:
        raise DimensionError(f"RIS size must be a perfect square, got {m_total}")
    p = np.arange(m)
    row = np.exp(1j * np.pi * p * (np.sin(phi) * np.cos(psi)))
    col = np.exp(1j * np.pi * p * (np.sin(phi) * np.sin(psi)))
    return np.outer(row, col).ravel()


def _ris_steering_batch(phis: np.ndarray, psis: np.ndarray, m_total: int) -> np.ndarray:
    """Stack of RIS steering vectors as columns, shape (m_total, len(phis))."""
    return np.stack([steering_ris(p, s, m_total) for p, s in zip(phis, psis)], axis=1)


def gen_parametric(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSample:
    """Multipath sample with random angles and CN(0,1) gains.

    Draw order is fixed: per redraw attempt the BS-RIS elevations, azimuths
    and gains (in that order), then per user its distance, elevations,
    azimuths and gains. H_br is redrawn until rank(H_br) >= K, up to
    MAX_REDRAWS attempts.
    """
    loss_br = path_loss(cfg.d_ris, cfg.C0, cfg.d0, cfg.eta)
    h_br = None
    for _ in range(MAX_REDRAWS):
        phis = rng.uniform(0.0, np.pi, cfg.Q_br)
        psis = rng.uniform(0.0, 2.0 * np.pi, cfg.Q_br)
        gains = crandn(rng, cfg.Q_br)
        a_ris = _ris_steering_batch(phis, psis, cfg.M)
        a_bs = np.stack([steering_bs(p, cfg.N) for p in phis], axis=1)
        cand = math.sqrt(loss_br) * (a_ris * gains) @ a_bs.T
        if np.linalg.matrix_rank(cand) >= cfg.K:
            h_br = cand
            break
    if h_br is None:
        raise GenerationError(
            f"rank(H_br) < K={cfg.K} persisted for {MAX_REDRAWS} redraws "
            f"(Q_br={cfg.Q_br}, M={cfg.M}, N={cfg.N})"
        )

    cols = []
    lo, hi = cfg.d_user_range
    for _ in range(cfg.K):
        d_user = rng.uniform(lo, hi)
        phis = rng.uniform(0.0, np.pi, cfg.Q_ru)
        psis = rng.uniform(0.0, 2.0 * np.pi, cfg.Q_ru)
        gains = crandn(rng, cfg.Q_ru)
        a_ris = _ris_steering_batch(phis, psis, cfg.M)
        cols.append(math.sqrt(path_loss(d_user, cfg.C0, cfg.d0, cfg.eta)) * a_ris @ gains)
    return ChannelSample(H_br=h_br, H_ru=np.stack(cols, axis=1))


def gen_geometric(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSample:
    """Sample from explicit positions: BSs on a circle, users in an annulus.

    BS b sits at angle 2*pi*b/num_bs on a circle of radius d_ris around the
    RIS and contributes N/num_bs columns through a single path. Users are
    area-uniform in the annulus d_user_range. Incidence is in-plane: the RIS
    polar angle is pi/2 - geo_elevation and azimuths follow the positions.
    BS arrays lie along the global x axis, so the departure spatial
    frequency toward the RIS at angle theta is -cos(theta).

    Note rank(H_br) equals the number of distinct RIS steering vectors, one
    per BS; on the half-wavelength grid the two axis-aligned diametral
    pairs alias, so 4 BSs span rank 2 and 8 BSs span rank 6. Choose num_bs
    accordingly for the requested user count.
    """
    if cfg.N % cfg.num_bs != 0:
        raise ConfigError(f"N={cfg.N} must be divisible by num_bs={cfg.num_bs}")
    n_per_bs = cfg.N // cfg.num_bs
    polar = np.pi / 2.0 - cfg.geo_elevation
    thetas = 2.0 * np.pi * np.arange(cfg.num_bs) / cfg.num_bs
    loss_br = path_loss(cfg.d_ris, cfg.C0, cfg.d0, cfg.eta)
    a_ris_bs = _ris_steering_batch(np.full(cfg.num_bs, polar), thetas, cfg.M)
    a_bs = np.stack([_ula(-np.cos(t), n_per_bs) for t in thetas], axis=1)

    h_br = None
    for _ in range(MAX_REDRAWS):
        gains = crandn(rng, cfg.num_bs)
        blocks = [
            math.sqrt(loss_br) * gains[b] * np.outer(a_ris_bs[:, b], a_bs[:, b])
            for b in range(cfg.num_bs)
        ]
        cand = np.concatenate(blocks, axis=1)
        if np.linalg.matrix_rank(cand) >= cfg.K:
            h_br = cand
            break
    if h_br is None:
        raise GenerationError(
            f"rank(H_br) < K={cfg.K} persisted for {MAX_REDRAWS} redraws; "
            f"the geometric model yields one path per BS (num_bs={cfg.num_bs})"
        )

    lo, hi = cfg.d_user_range
    cols = []
    for _ in range(cfg.K):
        radius = math.sqrt(rng.uniform(lo**2, hi**2))
        azimuth = rng.uniform(0.0, 2.0 * np.pi)
        gain = crandn(rng)
        cols.append(
            math.sqrt(path_loss(radius, cfg.C0, cfg.d0, cfg.eta))
            * gain
            * steering_ris(polar, azimuth, cfg.M)
        )
    return ChannelSample(H_br=h_br, H_ru=np.stack(cols, axis=1))
