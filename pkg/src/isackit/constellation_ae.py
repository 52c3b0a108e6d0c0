"""Autoencoder constellation design with a radar presence detector head.

A shared encoder maps K message bits to one complex symbol; a communication
decoder and a radar presence detector are trained jointly through the weighted
loss eta*BCE(detector) + (1-eta)*CE(decoder). The encoder batch is normalized
to unit average symbol power every step, so the trade-off shapes geometry
rather than transmit power.

Evaluation compares constellations (learned or classical) under matched
receivers: minimum-distance decoding for SER, and the exact likelihood-ratio
statistic for presence detection, with noise levels calibrated against a
reference constellation rather than quoted SNRs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .neural import (
    MlpModel,
    TrainConfig,
    adam_step,
    backward_pass,
    forward_pass,
    init_adam,
    init_mlp,
    predict,
)

_HIDDEN = (16, 32, 16)
_CLAMP = 1e-12


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power symbol set with integer message labels."""

    points: np.ndarray
    labels: np.ndarray
    avg_power: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        if pts.ndim != 1 or labels.shape != pts.shape:
            raise ValueError("points and labels must be matching vectors")
        if sorted(labels.tolist()) != list(range(pts.size)):
            raise ValueError("labels must be a permutation of 0..M-1")
        power = float(np.mean(np.abs(pts) ** 2))
        if abs(power - 1.0) > 1e-6 or abs(self.avg_power - power) > 1e-6:
            raise ValueError("constellation must carry unit average power")

    @property
    def size(self) -> int:
        return self.points.size


@dataclass
class IsacAutoencoder:
    """Encoder / communication decoder / radar detector triple."""

    encoder: MlpModel
    comm_decoder: MlpModel
    radar_detector: MlpModel
    weight: float
    comm_noise_var: float
    radar_noise_var: float
    comm_head: str = "softmax"

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")
        if self.comm_head not in ("softmax", "bits"):
            raise ValueError("comm_head must be 'softmax' or 'bits'")
        K = self.encoder.input_dim
        out = self.comm_decoder.output_dim
        expected = 2 ** K if self.comm_head == "softmax" else K
        if out != expected or self.encoder.output_dim != 2:
            raise ValueError("head dimensions disagree with the message size")
        if self.radar_detector.output_dim != 1:
            raise ValueError("detector must end in a single unit")

    @property
    def num_bits(self) -> int:
        return self.encoder.input_dim


def message_bits(labels, num_bits: int) -> np.ndarray:
    """Little-endian bit expansion of message labels, shape (B, num_bits)."""
    labels = np.asarray(labels, dtype=int)
    j = np.arange(num_bits)
    return ((labels[:, None] >> j) & 1).astype(float)


def build_isac_ae(num_bits: int, weight: float, comm_noise_var: float,
                  radar_noise_var: float, rng: np.random.Generator,
                  comm_head: str = "softmax") -> IsacAutoencoder:
    """Fresh triple with the shared (16, 32, 16) hidden trunk."""
    M = 2 ** num_bits
    hidden_acts = ["relu"] * len(_HIDDEN)
    enc = init_mlp([num_bits, *_HIDDEN, 2], hidden_acts + ["linear"], rng)
    dec_out = M if comm_head == "softmax" else num_bits
    dec_act = "softmax" if comm_head == "softmax" else "sigmoid"
    dec = init_mlp([2, *_HIDDEN, dec_out], hidden_acts + [dec_act], rng)
    det = init_mlp([2, *_HIDDEN, 1], hidden_acts + ["sigmoid"], rng)
    return IsacAutoencoder(enc, dec, det, weight, comm_noise_var,
                           radar_noise_var, comm_head)


# ------------------------------------------------------- power normalization


def normalize_symbols(raw: np.ndarray):
    """Scale a (B, 2) batch so the mean complex symbol power is one."""
    raw = np.atleast_2d(raw)
    scale = np.sqrt(np.mean(np.sum(raw ** 2, axis=1)))
    if scale <= 0:
        raise ValueError("all-zero encoder output cannot be normalized")
    return raw / scale, float(scale)


def normalize_vjp(symbols: np.ndarray, scale: float,
                  grad: np.ndarray) -> np.ndarray:
    """Backward pass of normalize_symbols given its output and scale."""
    coupling = np.mean(np.sum(grad * symbols, axis=1))
    return (grad - symbols * coupling) / scale


# ------------------------------------------------------------------- losses


def comm_loss(outputs: np.ndarray, labels_or_bits, mode: str = "softmax"):
    """Cross-entropy of the communication head; returns (value, gradient).

    softmax mode: outputs are (B, M) class probabilities, targets are integer
    labels. bits mode: outputs are (B, K) per-bit probabilities, targets are
    bit matrices, scored by full binary cross-entropy summed over bits.
    """
    out = np.atleast_2d(outputs)
    B = out.shape[0]
    p = np.clip(out, _CLAMP, 1.0 - _CLAMP)
    if mode == "softmax":
        labels = np.asarray(labels_or_bits, dtype=int)
        picked = p[np.arange(B), labels]
        value = float(-np.mean(np.log(picked)))
        grad = np.zeros_like(out)
        grad[np.arange(B), labels] = -1.0 / (B * picked)
        return value, grad
    if mode == "bits":
        bits = np.atleast_2d(np.asarray(labels_or_bits, dtype=float))
        value = float(-np.mean(
            np.sum(bits * np.log(p) + (1 - bits) * np.log(1 - p), axis=1)))
        grad = (-bits / p + (1 - bits) / (1 - p)) / B
        return value, grad
    raise ValueError("mode must be 'softmax' or 'bits'")


def radar_loss(outputs: np.ndarray, flags):
    """Binary cross-entropy of the presence detector; (value, gradient)."""
    out = np.asarray(outputs, dtype=float).reshape(-1)
    T = np.asarray(flags, dtype=float).reshape(-1)
    p = np.clip(out, _CLAMP, 1.0 - _CLAMP)
    value = float(-np.mean(T * np.log(p) + (1 - T) * np.log(1 - p)))
    grad = ((-T / p + (1 - T) / (1 - p)) / out.size).reshape(outputs.shape)
    return value, grad


# ----------------------------------------------------------------- sampling


def sample_training_batch(encoder: MlpModel, batch: int,
                          comm_noise_var: float, radar_noise_var: float,
                          rng: np.random.Generator):
    """Draw messages, push them through the encoder (batch-normalized), and
    emit channel observations: y = x + n_comm, z = T*x + n_radar with
    T ~ Bernoulli(1/2). Returns (labels, y, z, T)."""
    K = encoder.input_dim
    labels = rng.integers(0, 2 ** K, size=batch)
    x, _ = normalize_symbols(predict(encoder, message_bits(labels, K)))
    y = x + np.sqrt(comm_noise_var / 2.0) * rng.standard_normal((batch, 2))
    T = rng.integers(0, 2, size=batch)
    z = T[:, None] * x \
        + np.sqrt(radar_noise_var / 2.0) * rng.standard_normal((batch, 2))
    return labels, y, z, T


def combined_step(ae: IsacAutoencoder, labels, T, noise_c, noise_r):
    """Loss and gradients of one training step with frozen randomness.

    noise_c/noise_r are pre-drawn (B, 2) noise matrices; T the presence
    flags. Returns (value, enc_grads, dec_grads, det_grads) so the whole
    chain stays finite-difference checkable.
    """
    bits = message_bits(labels, ae.num_bits)
    raw, enc_cache = forward_pass(ae.encoder, bits)
    x, scale = normalize_symbols(raw)
    T = np.asarray(T, dtype=float)
    y = x + noise_c
    z = T[:, None] * x + noise_r
    probs, dec_cache = forward_pass(ae.comm_decoder, y)
    that, det_cache = forward_pass(ae.radar_detector, z)
    if ae.comm_head == "softmax":
        value_c, grad_c = comm_loss(probs, labels, "softmax")
    else:
        value_c, grad_c = comm_loss(probs, bits, "bits")
    value_r, grad_r = radar_loss(that, T)
    value = ae.weight * value_r + (1.0 - ae.weight) * value_c
    dec_grads, gy = backward_pass(ae.comm_decoder, dec_cache,
                                  (1.0 - ae.weight) * grad_c)
    det_grads, gz = backward_pass(ae.radar_detector, det_cache,
                                  ae.weight * grad_r)
    gx = gy + T[:, None] * gz
    enc_grads, _ = backward_pass(ae.encoder, enc_cache,
                                 normalize_vjp(x, scale, gx))
    return value, enc_grads, dec_grads, det_grads


def train_isac_ae(weight: float, num_bits: int, comm_noise_var: float,
                  radar_noise_var: float, config: TrainConfig, *,
                  samples_per_epoch: int = 100_000,
                  comm_head: str = "softmax") -> IsacAutoencoder:
    """Joint end-to-end training of the triple; fresh noise every step."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    rng = np.random.default_rng(config.seed)
    ae = build_isac_ae(num_bits, weight, comm_noise_var, radar_noise_var,
                       rng, comm_head)
    states = {name: init_adam(net, lr=config.lr) for name, net in
              (("enc", ae.encoder), ("dec", ae.comm_decoder),
               ("det", ae.radar_detector))}
    steps = max(1, samples_per_epoch // config.batch_size)
    B = config.batch_size
    M = 2 ** num_bits
    for _ in range(config.epochs):
        for _ in range(steps):
            labels = rng.integers(0, M, size=B)
            T = rng.integers(0, 2, size=B)
            noise_c = np.sqrt(comm_noise_var / 2.0) \
                * rng.standard_normal((B, 2))
            noise_r = np.sqrt(radar_noise_var / 2.0) \
                * rng.standard_normal((B, 2))
            _, enc_g, dec_g, det_g = combined_step(ae, labels, T,
                                                   noise_c, noise_r)
            adam_step(states["enc"], ae.encoder, enc_g)
            adam_step(states["dec"], ae.comm_decoder, dec_g)
            adam_step(states["det"], ae.radar_detector, det_g)
    return ae


def extract_constellation(ae: IsacAutoencoder) -> Constellation:
    """Encode every message and renormalize to unit average power."""
    M = 2 ** ae.num_bits
    labels = np.arange(M)
    raw = predict(ae.encoder, message_bits(labels, ae.num_bits))
    pts = raw[:, 0] + 1j * raw[:, 1]
    rms = np.sqrt(np.mean(np.abs(pts) ** 2))
    if rms <= 0:
        raise ValueError("degenerate all-zero constellation")
    return Constellation(pts / rms, labels, 1.0)


# ------------------------------------------------------------------ receivers


def detection_statistic(z, points, noise_var: float,
                        block: int = 16384) -> np.ndarray:
    """Exact log likelihood ratio of target presence for a known symbol set:
    logmeanexp_i(-|z - p_i|^2 / sigma^2) + |z|^2 / sigma^2. Evaluated in
    blocks to bound the (trials, M) distance matrix."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    pts = np.asarray(points, dtype=complex).reshape(-1)
    out = np.empty(z.size)
    for start in range(0, z.size, block):
        zb = z[start:start + block]
        d2 = np.abs(zb[:, None] - pts[None, :]) ** 2
        out[start:start + block] = logsumexp(-d2 / noise_var, axis=1)
    return out - np.log(pts.size) + np.abs(z) ** 2 / noise_var


def ml_decode(y, points) -> np.ndarray:
    """Minimum-distance decision indices into the constellation array."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    pts = np.asarray(points, dtype=complex).reshape(-1)
    return np.argmin(np.abs(y[:, None] - pts[None, :]) ** 2, axis=1)


def _as_constellation(target) -> Constellation:
    if isinstance(target, IsacAutoencoder):
        return extract_constellation(target)
    if isinstance(target, Constellation):
        return target
    raise TypeError("expected an IsacAutoencoder or a Constellation")


def evaluate_isac(target, comm_noise_var: float, radar_noise_var: float,
                  threshold: float, trials: int, rng: np.random.Generator):
    """Monte-Carlo (SER, Pd, Pfa) under matched receivers."""
    if trials < 10_000:
        warnings.warn("trial count below the statistical floor",
                      stacklevel=2)
    const = _as_constellation(target)
    pts = const.points
    idx = rng.integers(0, pts.size, size=trials)
    noise = np.sqrt(comm_noise_var / 2.0) * (
        rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    ser = float(np.mean(ml_decode(pts[idx] + noise, pts) != idx))
    idx1 = rng.integers(0, pts.size, size=trials)
    n1 = np.sqrt(radar_noise_var / 2.0) * (
        rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    n0 = np.sqrt(radar_noise_var / 2.0) * (
        rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    s1 = detection_statistic(pts[idx1] + n1, pts, radar_noise_var)
    s0 = detection_statistic(n0, pts, radar_noise_var)
    pd = float(np.mean(s1 > threshold))
    pfa = float(np.mean(s0 > threshold))
    return ser, pd, pfa


def threshold_for_pfa(target, radar_noise_var: float, pfa: float,
                      trials: int, rng: np.random.Generator) -> float:
    """H0 quantile of the detection statistic at the requested Pfa."""
    const = _as_constellation(target)
    noise = np.sqrt(radar_noise_var / 2.0) * (
        rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    stats = detection_statistic(noise, const.points, radar_noise_var)
    return float(np.quantile(stats, 1.0 - pfa))


# ----------------------------------------------------------------- baselines


def baseline_constellation(kind: str, size: int) -> Constellation:
    """Classical references: 'PSK' (uniform ring) or 'QAM' (square grid for
    square sizes, the 6x6-minus-corners cross for 32)."""
    labels = np.arange(size)
    if kind.upper() == "PSK":
        pts = np.exp(2j * np.pi * labels / size)
    elif kind.upper() == "QAM":
        side = int(round(np.sqrt(size)))
        if side * side == size:
            lv = 2 * np.arange(side) - side + 1
            grid = lv[:, None] + 1j * lv[None, :]
            pts = grid.ravel()
        elif size == 32:
            lv = np.array([-5, -3, -1, 1, 3, 5])
            grid = (lv[:, None] + 1j * lv[None, :]).ravel()
            keep = ~((np.abs(grid.real) == 5) & (np.abs(grid.imag) == 5))
            pts = grid[keep]
        else:
            raise ValueError("QAM sizes: perfect squares or 32")
        pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    else:
        raise ValueError("kind must be 'QAM' or 'PSK'")
    return Constellation(pts, labels, 1.0)


# --------------------------------------------------------------- calibration


def calibrate_comm_noise(reference: Constellation, target_ser: float,
                         trials: int, rng: np.random.Generator,
                         lo: float = 1e-4, hi: float = 4.0,
                         iters: int = 40) -> float:
    """Bisect the comm noise variance so the reference constellation hits the
    target SER under ML decoding (common random numbers across candidates)."""
    pts = reference.points
    idx = rng.integers(0, pts.size, size=trials)
    unit = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    unit /= np.sqrt(2.0)

    def ser_at(var):
        y = pts[idx] + np.sqrt(var) * unit
        return np.mean(ml_decode(y, pts) != idx)

    if ser_at(lo) > target_ser or ser_at(hi) < target_ser:
        raise ValueError("target SER outside the bisection bracket")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ser_at(mid) < target_ser:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_radar_noise(reference: Constellation, target_pd: float,
                          target_pfa: float, trials: int,
                          rng: np.random.Generator, lo: float = 0.01,
                          hi: float = 4.0, iters: int = 40):
    """Bisect the radar noise variance so the reference hits target_pd at the
    threshold pinned to target_pfa; returns (noise_var, threshold)."""
    pts = reference.points
    idx = rng.integers(0, pts.size, size=trials)
    u1 = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    u0 = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials))
    u1 /= np.sqrt(2.0)
    u0 /= np.sqrt(2.0)

    def pd_at(var):
        thr = np.quantile(detection_statistic(np.sqrt(var) * u0, pts, var),
                          1.0 - target_pfa)
        s1 = detection_statistic(pts[idx] + np.sqrt(var) * u1, pts, var)
        return np.mean(s1 > thr), thr

    if pd_at(hi)[0] > target_pd or pd_at(lo)[0] < target_pd:
        raise ValueError("target Pd outside the bisection bracket")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if pd_at(mid)[0] > target_pd:
            lo = mid
        else:
            hi = mid
    var = 0.5 * (lo + hi)
    return var, float(pd_at(var)[1])


def amplitude_spread(const: Constellation) -> float:
    """stddev(|points|) / mean(|points|); 0 for exact constant modulus."""
    mags = np.abs(const.points)
    return float(np.std(mags) / np.mean(mags))


def export_constellation(const: Constellation, path) -> None:
    """Write 'label,re,im' CSV rows sorted by ascending label."""
    order = np.argsort(const.labels)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label,re,im\n")
        for i in order:
            fh.write("{:d},{:.9g},{:.9g}\n".format(
                int(const.labels[i]), const.points[i].real,
                const.points[i].imag))
