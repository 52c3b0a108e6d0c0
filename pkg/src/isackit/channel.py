"""Propagation layer: uniform-linear-array steering, Rician user channels,
Rayleigh draws, and Jakes-correlated channel aging.

Conventions: angles are radians from broadside, antenna spacing is normalized
by the carrier wavelength, and every random quantity is drawn from an explicit
numpy Generator so that experiments replay bit-identically from their seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: `num_antennas` elements, `spacing` wavelengths apart."""

    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be at least 1")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")


@dataclass(frozen=True)
class RicianParams:
    """Per-user link: Rician factor (LoS/scatter power ratio), linear
    large-scale gain, and departure angle in [-pi/2, pi/2]."""

    rician_factor: float
    large_scale_gain: float = 1.0
    departure_angle: float = 0.0

    def __post_init__(self):
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be nonnegative")
        if self.large_scale_gain <= 0:
            raise ValueError("large_scale_gain must be positive")
        if not -np.pi / 2 <= self.departure_angle <= np.pi / 2:
            raise ValueError("departure_angle must lie in [-pi/2, pi/2]")

    @property
    def los_weight(self) -> float:
        k = self.rician_factor
        return float(np.sqrt(k * self.large_scale_gain / (k + 1.0)))

    @property
    def scatter_weight(self) -> float:
        return float(np.sqrt(self.large_scale_gain / (self.rician_factor + 1.0)))


@dataclass(frozen=True)
class ChannelMatrix:
    """Stack of user channels, one row per user (K x M)."""

    entries: np.ndarray
    per_user_params: tuple

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "per_user_params", tuple(self.per_user_params))
        if ent.ndim != 2 or ent.shape[0] != len(self.per_user_params):
            raise ValueError("row count must equal the number of users")
        if not np.all(np.isfinite(ent)):
            raise ValueError("channel entries must be finite")

    @property
    def num_users(self) -> int:
        return self.entries.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class AgingParams:
    """Mobility description for one aging step.

    `mobility_phase` is the deterministic LoS rotation; pass None to draw it
    uniformly on [-pi, pi] at each aging step.
    """

    user_speed: float
    carrier_freq: float
    sample_period: float
    mobility_phase: Optional[float] = None

    def __post_init__(self):
        if self.user_speed < 0:
            raise ValueError("user_speed must be nonnegative")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")
        if self.mobility_phase is not None and not -np.pi <= self.mobility_phase <= np.pi:
            raise ValueError("mobility_phase must lie in [-pi, pi]")


def path_loss_gain(distance_m: float, exponent: float = 3.0, reference_m: float = 1.0) -> float:
    """Stand-in large-scale gain (d/d0)^(-exponent) for building RicianParams."""
    if distance_m <= 0 or reference_m <= 0:
        raise ValueError("distances must be positive")
    return float((distance_m / reference_m) ** (-exponent))


def steering_vector(theta: float, geom: ArrayGeometry) -> np.ndarray:
    """Array response at angle theta; element m is exp(j*2*pi*spacing*m*sin(theta))."""
    m = np.arange(geom.num_antennas)
    return np.exp(1j * 2 * np.pi * geom.spacing * m * np.sin(theta))


def steering_grid(angles, geom: ArrayGeometry) -> np.ndarray:
    """Steering vectors stacked column-wise over an angle grid (M x A)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    m = np.arange(geom.num_antennas)
    return np.exp(1j * 2 * np.pi * geom.spacing * np.outer(m, np.sin(angles)))


def _scatter_draw(dim: int, rng: np.random.Generator) -> np.ndarray:
    # unit circularly-symmetric complex Gaussian entries
    return (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / np.sqrt(2.0)


def sample_user_channel(params: RicianParams, geom: ArrayGeometry,
                        rng: np.random.Generator) -> np.ndarray:
    """One Rician channel draw: LoS steering plus scattered component,
    weighted by sqrt(K_h*eta/(K_h+1)) and sqrt(eta/(K_h+1))."""
    hbar = steering_vector(params.departure_angle, geom)
    htilde = _scatter_draw(geom.num_antennas, rng)
    return params.los_weight * hbar + params.scatter_weight * htilde


def sample_channel_matrix(users: Sequence[RicianParams], geom: ArrayGeometry,
                          rng: np.random.Generator) -> ChannelMatrix:
    if len(users) == 0:
        raise ValueError("no users")
    rows = np.stack([sample_user_channel(u, geom, rng) for u in users])
    return ChannelMatrix(entries=rows, per_user_params=tuple(users))


def sample_rayleigh(dim: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. unit circularly-symmetric complex Gaussian vector."""
    if dim < 1:
        raise ValueError("dim must be positive")
    return _scatter_draw(dim, rng)


def jakes_correlation(aging: AgingParams) -> float:
    """Temporal correlation J0(2*pi*f_D*T_s) with Doppler f_D = v*f_c/c."""
    f_d = aging.user_speed * aging.carrier_freq / SPEED_OF_LIGHT
    return float(j0(2 * np.pi * f_d * aging.sample_period))


def age_channel(prev: np.ndarray, params: RicianParams, geom: ArrayGeometry,
                aging: AgingParams, rng: np.random.Generator) -> np.ndarray:
    """One aging step: rotate the LoS part by exp(j*theta') and evolve the
    scattered part as chi*old + sqrt(1-chi^2)*innovation.

    `prev` must be an (unrotated) draw from `params`; the LoS/scatter split is
    recovered from the known weights, which is exact under that precondition.
    """
    prev = np.asarray(prev, dtype=complex)
    chi = jakes_correlation(aging)
    if abs(chi) > 1:
        raise ValueError("invalid correlation")
    phase = aging.mobility_phase
    if phase is None:
        phase = rng.uniform(-np.pi, np.pi)
    hbar = steering_vector(params.departure_angle, geom)
    a, b = params.los_weight, params.scatter_weight
    if b > 0:
        htilde = (prev - a * hbar) / b
    else:
        htilde = np.zeros_like(prev)
    innovation = _scatter_draw(prev.shape[0], rng)
    htilde_new = chi * htilde + np.sqrt(1.0 - chi**2) * innovation
    return a * np.exp(1j * phase) * hbar + b * htilde_new
