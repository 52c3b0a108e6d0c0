"""Evaluation quantities shared by all case studies: multi-user interference,
SINR and sum rates, transmit beampatterns, GLRT detection and ROC curves,
MI/MMSE curves for scalar AWGN inputs, modified CRBs, radar resolutions, and
the estimation-information bounds.

Rates: `sum_rate` is bits/symbol (log2); `hybrid_sum_rate` is nats (natural
log), with `hybrid_sum_rate_bits` as the converted variant. Mutual information
is computed in nats internally.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import SPEED_OF_LIGHT, ArrayGeometry, ChannelMatrix, steering_vector


@dataclass(frozen=True)
class RateReport:
    per_user_sinr: np.ndarray  # linear
    sum_rate: float  # bits/symbol


@dataclass(frozen=True)
class BeampatternCurve:
    angles: np.ndarray  # radians
    gains: np.ndarray  # linear power

    def __post_init__(self):
        if len(self.angles) != len(self.gains):
            raise ValueError("angles and gains must have equal length")


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    pfa: np.ndarray
    pd: np.ndarray


@dataclass(frozen=True)
class MiMmsePoint:
    snr: float  # linear
    mutual_info: float  # nats
    mmse: float  # in [0, 1] for unit-power input


def _as_matrix(H) -> np.ndarray:
    if isinstance(H, ChannelMatrix):
        return H.entries
    return np.asarray(H, dtype=complex)


# --------------------------------------------------------------- MUI / rates


def mui_power(H, X, D) -> float:
    """Total multi-user interference power ||H X - D||_F^2."""
    Hm = _as_matrix(H)
    X = np.asarray(X, dtype=complex)
    D = np.asarray(D, dtype=complex)
    if Hm.shape[1] != X.shape[0] or Hm.shape[0] != D.shape[0] or X.shape[1] != D.shape[1]:
        raise ValueError("dimension mismatch between H, X, D")
    return float(np.linalg.norm(Hm @ X - D) ** 2)


def per_user_sinr(H, X, D, noise_var: float) -> np.ndarray:
    """Per-user SINR with expectations realized as averages over the frame
    columns; assumes D carries a unit-energy constellation."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    Hm = _as_matrix(H)
    X = np.asarray(X, dtype=complex)
    D = np.asarray(D, dtype=complex)
    if Hm.shape[1] != X.shape[0] or Hm.shape[0] != D.shape[0] or X.shape[1] != D.shape[1]:
        raise ValueError("dimension mismatch between H, X, D")
    signal = np.mean(np.abs(D) ** 2, axis=1)
    residual = np.mean(np.abs(Hm @ X - D) ** 2, axis=1)
    return signal / (residual + noise_var)


def sum_rate(sinrs: np.ndarray) -> float:
    """Achievable sum rate sum_k log2(1 + gamma_k) in bits/symbol."""
    return float(np.sum(np.log2(1.0 + np.asarray(sinrs, dtype=float))))


def rate_report(H, X, D, noise_var: float) -> RateReport:
    gam = per_user_sinr(H, X, D, noise_var)
    return RateReport(per_user_sinr=gam, sum_rate=sum_rate(gam))


def hybrid_sum_rate(channels, F, W, noise_var: float) -> float:
    """Sum rate (nats) of a hybrid beamformer: channels is K x N (rows h_k),
    F the N x L analog stage, W the L x K digital stage."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    h = np.asarray(channels, dtype=complex)
    if h.ndim == 1:
        h = h[None, :]
    F = np.asarray(F, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if h.shape[1] != F.shape[0] or F.shape[1] != W.shape[0] or W.shape[1] != h.shape[0]:
        raise ValueError("dimension mismatch between channels, F, W")
    T = h.conj() @ F @ W  # T[k, j] = h_k^H F w_j
    p = np.abs(T) ** 2
    total = p.sum(axis=1) + noise_var
    signal = np.diag(p)
    return float(np.sum(np.log(total / (total - signal))))


def hybrid_sum_rate_bits(channels, F, W, noise_var: float) -> float:
    return hybrid_sum_rate(channels, F, W, noise_var) / np.log(2.0)


# ----------------------------------------------------- covariance / pattern


def waveform_covariance(X, tau_d: int | None = None) -> np.ndarray:
    """Transmit covariance (1/tau_d) X X^H, Hermitian-symmetrized."""
    X = np.asarray(X, dtype=complex)
    if tau_d is None:
        tau_d = X.shape[1]
    cov = (X @ X.conj().T) / tau_d
    return 0.5 * (cov + cov.conj().T)


def transmit_beampattern(cov, angles, geom: ArrayGeometry) -> BeampatternCurve:
    """P(theta) = v(theta)^H Sigma v(theta) on the given angle grid."""
    cov = np.asarray(cov, dtype=complex)
    cov = 0.5 * (cov + cov.conj().T)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    m = np.arange(geom.num_antennas)
    V = np.exp(1j * 2 * np.pi * geom.spacing * np.outer(m, np.sin(angles)))  # M x A
    gains = np.einsum("ma,mn,na->a", V.conj(), cov, V).real
    return BeampatternCurve(angles=angles, gains=gains)


# ------------------------------------------------------------ GLRT and ROC


def _glrt_core(echoes: np.ndarray, target_angle: float, X: np.ndarray,
               noise_var: float, geom: ArrayGeometry) -> np.ndarray:
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    X = np.asarray(X, dtype=complex)
    v = steering_vector(target_angle, geom)
    s = v @ X  # effective probing sequence v^T X, length tau_d
    s_energy = float(np.linalg.norm(s) ** 2)
    if s_energy <= 0:
        raise ValueError("waveform has no energy toward target")
    v_energy = float(np.linalg.norm(v) ** 2)
    inner = np.einsum("a,tab,b->t", v.conj(), echoes, s.conj())
    return np.abs(inner) ** 2 / (noise_var * v_energy * s_energy)


def glrt_statistic(echo, target_angle: float, X, noise_var: float,
                   geom: ArrayGeometry) -> float:
    """GLRT statistic for a target at `target_angle` with unknown complex
    amplitude: |v^H Z s^H|^2 / (sigma^2 ||v||^2 ||s||^2), s = v^T X.

    Under H0 (echo = noise with per-entry variance sigma^2) the statistic is
    exponential with unit mean; larger values indicate a target."""
    echo = np.asarray(echo, dtype=complex)
    return float(_glrt_core(echo[None, :, :], target_angle, X, noise_var, geom)[0])


def glrt_statistics(echoes, target_angle: float, X, noise_var: float,
                    geom: ArrayGeometry) -> np.ndarray:
    """Vectorized glrt_statistic over a stack of echoes (trials x M x tau_d)."""
    return _glrt_core(np.asarray(echoes, dtype=complex), target_angle, X, noise_var, geom)


def simulate_target_echoes(X, target_angle: float, alpha: complex, noise_var: float,
                           geom: ArrayGeometry, trials: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Monostatic echoes Z = alpha * v v^T X + N, stacked over trials.
    alpha = 0 gives pure-noise (H0) echoes."""
    X = np.asarray(X, dtype=complex)
    v = steering_vector(target_angle, geom)
    mean = alpha * np.outer(v, v @ X)
    shape = (trials,) + mean.shape
    noise = np.sqrt(noise_var / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return mean[None, :, :] + noise


def roc_curve(stats_h0, stats_h1, num_thresholds: int = 201) -> RocCurve:
    """Empirical ROC by sweeping a shared threshold grid; exceedance is strict,
    so the lowest threshold yields (pfa, pd) = (1, 1) and the highest (0, 0)."""
    h0 = np.sort(np.asarray(stats_h0, dtype=float))
    h1 = np.sort(np.asarray(stats_h1, dtype=float))
    lo = min(h0[0], h1[0])
    hi = max(h0[-1], h1[-1])
    span = max(hi - lo, 1e-12)
    thresholds = np.linspace(lo - 1e-9 * span - 1e-12, hi, num_thresholds)
    pfa = 1.0 - np.searchsorted(h0, thresholds, side="right") / len(h0)
    pd = 1.0 - np.searchsorted(h1, thresholds, side="right") / len(h1)
    return RocCurve(thresholds=thresholds, pfa=pfa, pd=pd)


def detection_at_false_alarm(curve: RocCurve, pfa_target: float) -> float:
    """Interpolated detection probability at the requested false-alarm rate."""
    order = np.argsort(curve.pfa)
    return float(np.interp(pfa_target, curve.pfa[order], curve.pd[order]))


# ------------------------------------------------------------------ MI/MMSE


def gaussian_mi_mmse(snr: float) -> MiMmsePoint:
    """Closed-form Gaussian-input reference: I = ln(1+snr), MMSE = 1/(1+snr)."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    return MiMmsePoint(snr=snr, mutual_info=float(np.log1p(snr)), mmse=float(1.0 / (1.0 + snr)))


def _mi_mmse_on_noise(points, probs, snr, noise, weights):
    # noise: complex offsets whose expectation is realized by `weights`;
    # processed in chunks so the (M, chunk, M) tensors stay small
    M = points.size
    a = np.sqrt(snr)
    log_probs = np.log(probs)
    chunk = max(1, int(4_000_000 // (M * M)))
    neg_logpy_acc = 0.0
    mmse_acc = 0.0
    for start in range(0, noise.size, chunk):
        nz = noise[start:start + chunk]
        wz = weights[start:start + chunk]
        y = a * points[:, None] + nz[None, :]  # (M, Q)
        d2 = np.abs(y[:, :, None] - a * points[None, None, :]) ** 2
        log_terms = log_probs[None, None, :] - d2
        log_norm = logsumexp(log_terms, axis=-1)
        neg_logpy_acc += -np.sum(probs[:, None] * wz[None, :] * (log_norm - np.log(np.pi)))
        post = np.exp(log_terms - log_norm[:, :, None])
        xhat = post @ points  # (M, Q)
        se = np.abs(points[:, None] - xhat) ** 2
        mmse_acc += np.sum(probs[:, None] * wz[None, :] * se)
    mi = neg_logpy_acc - (1.0 + np.log(np.pi))
    return float(max(mi, 0.0)), float(np.clip(mmse_acc, 0.0, 1.0))


def awgn_mi_mmse(points, snr: float, probs=None, quad_order: int = 20,
                 mc_samples: int = 1_000_000, rng: np.random.Generator | None = None,
                 method: str = "auto") -> MiMmsePoint:
    """Mutual information (nats) and MMSE of a discrete unit-power input over
    the scalar complex AWGN channel y = sqrt(snr) x + n, n ~ CN(0, 1).

    Gauss-Hermite tensor quadrature (`quad_order` nodes per real dimension) is
    used up to 64 points; larger constellations fall back to Monte Carlo with
    `mc_samples` draws from `rng` (seeded Generator; default seed 0)."""
    points = np.asarray(points, dtype=complex).ravel()
    if probs is None:
        probs = np.full(points.size, 1.0 / points.size)
    else:
        probs = np.asarray(probs, dtype=float).ravel()
        if probs.shape != points.shape or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a probability vector matching points")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    avg_power = float(np.sum(probs * np.abs(points) ** 2))
    if abs(avg_power - 1.0) > 1e-6:
        raise ValueError("constellation must have unit average power")
    if method == "auto":
        method = "mc" if points.size > 64 else "quadrature"
    if method == "quadrature":
        t, w = np.polynomial.hermite.hermgauss(quad_order)
        # noise real/imag each N(0, 1/2): substitution leaves nodes unscaled
        noise = (t[:, None] + 1j * t[None, :]).ravel()
        weights = ((w[:, None] * w[None, :]) / np.pi).ravel()
    elif method == "mc":
        if rng is None:
            rng = np.random.default_rng(0)
        noise = (rng.standard_normal(mc_samples) + 1j * rng.standard_normal(mc_samples)) / np.sqrt(2.0)
        weights = np.full(mc_samples, 1.0 / mc_samples)
    else:
        raise ValueError(f"unknown method {method!r}")
    mi, mmse = _mi_mmse_on_noise(points, probs, snr, noise, weights)
    return MiMmsePoint(snr=snr, mutual_info=mi, mmse=mmse)


# ------------------------------------------------------------------- bounds


def mcrb_phase(es_over_n0: float, num_samples: int) -> float:
    """Modified CRB for carrier phase: (N0/2Es) * (1/L)."""
    if es_over_n0 <= 0 or num_samples < 1:
        raise ValueError("es_over_n0 must be positive and num_samples >= 1")
    return 1.0 / (2.0 * es_over_n0 * num_samples)


def mcrb_freq(es_over_n0: float, num_samples: int) -> float:
    """Modified CRB for frequency offset: (N0/2Es) * 3 / (pi^2 L (L^2 - 1))."""
    if es_over_n0 <= 0:
        raise ValueError("es_over_n0 must be positive")
    if num_samples < 2:
        raise ValueError("num_samples must be at least 2")
    L = num_samples
    return (1.0 / (2.0 * es_over_n0)) * 3.0 / (np.pi**2 * L * (L**2 - 1))


def radar_resolutions(bandwidth: float, wavelength: float, pulses: int,
                      pri: float, aperture: float):
    """(range, velocity, angle) resolutions: c/2W, lambda/2NT, 0.886 lambda/D."""
    if min(bandwidth, wavelength, pulses, pri, aperture) <= 0:
        raise ValueError("all radar parameters must be positive")
    delta_r = SPEED_OF_LIGHT / (2.0 * bandwidth)
    delta_v = wavelength / (2.0 * pulses * pri)
    delta_theta = 0.886 * wavelength / aperture
    return delta_r, delta_v, delta_theta


def estimation_rate_bounds(prior_var: float, distortion: float):
    """Estimation-information bounds: (1/2) log2(P/D) and R = -log2(D).
    A distortion above the prior variance clamps the first bound at zero."""
    if prior_var <= 0 or distortion <= 0:
        raise ValueError("prior_var and distortion must be positive")
    if distortion > prior_var:
        warnings.warn("distortion exceeds prior variance; bound clamped at 0")
        mi_bound = 0.0
    else:
        mi_bound = 0.5 * np.log2(prior_var / distortion)
    return float(mi_bound), float(-np.log2(distortion))


# ----------------------------------------------------------------- SER/BER


def ser(true_labels, decisions) -> float:
    true_labels = np.asarray(true_labels)
    decisions = np.asarray(decisions)
    if true_labels.shape != decisions.shape:
        raise ValueError("label arrays must have the same shape")
    return float(np.mean(true_labels != decisions))


def ber(true_bits, decided_bits) -> float:
    return ser(true_bits, decided_bits)
