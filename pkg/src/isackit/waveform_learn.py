"""Learning-based ISAC waveform prediction (Case Study I).

A dense network maps the stacked real/imaginary parts of (H, D, X0) to a
transmit frame, with a projection output layer enforcing the total power
budget and an unsupervised trade-off loss eta*MUI + (1-eta)*similarity. The
trained network replaces the per-frame optimization at prediction time.
"""

from __future__ import annotations

import dataclasses
import struct
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, ChannelMatrix, RicianParams, sample_channel_matrix
from .classical_design import (
    PROVENANCES,
    WaveformDesign,
    directional_covariance,
    procrustes_waveform,
    reference_covariance_omni,
)
from .neural import MlpModel, TrainConfig, init_mlp, predict, train

DEFAULT_RICIAN_FACTORS = (1.5, 2.7, 1.2, 2.5)

_MAGIC = b"WFDS"
_VERSION = 1


@dataclass(frozen=True)
class WaveformSample:
    """One training instance: channel, desired symbols, sensing reference.

    D is expected to hold unit-power symbols (QPSK in the experiments); shape
    agreement is enforced here, the power convention by the dataset maker.
    """

    H: ChannelMatrix | np.ndarray
    D: np.ndarray
    X0: WaveformDesign | np.ndarray

    def __post_init__(self):
        Hm = self.H.entries if isinstance(self.H, ChannelMatrix) else np.asarray(self.H)
        X0m = self.X0.X if isinstance(self.X0, WaveformDesign) else np.asarray(self.X0)
        D = np.asarray(self.D)
        if D.shape != (Hm.shape[0], X0m.shape[1]) or Hm.shape[1] != X0m.shape[0]:
            raise ValueError("H, D, X0 shapes disagree")

    @property
    def dims(self):
        Hm = self.H.entries if isinstance(self.H, ChannelMatrix) else np.asarray(self.H)
        return Hm.shape[1], Hm.shape[0], np.asarray(self.D).shape[1]  # M, K, tau


@dataclass(frozen=True)
class WaveformNetSpec:
    """Architecture bound to the problem dims: 2N -> 20N -> 10N -> 2*M*tau."""

    num_antennas: int
    num_users: int
    frame_length: int

    @property
    def feature_size(self) -> int:
        M, K, tau = self.num_antennas, self.num_users, self.frame_length
        return self.num_users * (M + tau) + M * tau

    @property
    def widths(self):
        n = self.feature_size
        return [2 * n, 20 * n, 10 * n, 2 * self.num_antennas * self.frame_length]

    @property
    def activations(self):
        return ["relu", "relu", "tanh"]

    def build(self, rng: np.random.Generator) -> MlpModel:
        return init_mlp(self.widths, self.activations, rng)


def _stack_complex(A: np.ndarray) -> np.ndarray:
    v = np.asarray(A, dtype=complex).flatten(order="F")
    return np.concatenate([v.real, v.imag])


def unstack_waveform(segment: np.ndarray, num_antennas: int, frame_length: int) -> np.ndarray:
    """Inverse of the real/imag stacking used by build_features."""
    segment = np.asarray(segment, dtype=float)
    half = num_antennas * frame_length
    if segment.shape != (2 * half,):
        raise ValueError("segment length does not match the waveform shape")
    flat = segment[:half] + 1j * segment[half:]
    return flat.reshape(num_antennas, frame_length, order="F")


def build_features(sample: WaveformSample) -> np.ndarray:
    """[Re vec H, Im vec H, Re vec D, Im vec D, Re vec X0, Im vec X0],
    column-major vectorization throughout."""
    Hm = sample.H.entries if isinstance(sample.H, ChannelMatrix) else np.asarray(sample.H)
    X0m = sample.X0.X if isinstance(sample.X0, WaveformDesign) else np.asarray(sample.X0)
    return np.concatenate([
        _stack_complex(Hm), _stack_complex(sample.D), _stack_complex(X0m)])


def power_projection(raw: np.ndarray, total_power: float, frame_length: int) -> np.ndarray:
    """Reassemble the complex frame and pull it into the power ball."""
    raw = np.asarray(raw, dtype=float)
    M = raw.size // (2 * frame_length)
    theta = unstack_waveform(raw, M, frame_length)
    budget = frame_length * total_power
    energy = np.linalg.norm(theta) ** 2
    if energy <= budget:
        return theta
    return np.sqrt(budget) * theta / np.sqrt(energy)


def _projection_vjp(raw: np.ndarray, grad_X: np.ndarray, total_power: float,
                    frame_length: int) -> np.ndarray:
    """Pull a gradient on the projected frame back to the raw output layer.

    grad_X is the complex combination dL/dRe + j*dL/dIm; on the sphere the
    map is c*(I - r r^T/|r|^2) with c = sqrt(budget)/|r|.
    """
    raw = np.asarray(raw, dtype=float)
    g = np.concatenate([grad_X.real.flatten(order="F"), grad_X.imag.flatten(order="F")])
    budget = frame_length * total_power
    energy = raw @ raw
    if energy <= budget:
        return g
    c = np.sqrt(budget / energy)
    return c * (g - raw * (raw @ g) / energy)


def isac_waveform_loss(predictions, samples, weight: float):
    """Batch trade-off loss and its gradient with respect to each frame.

    loss = (1/B) sum_n [ eta*||H_n X_n - D_n||^2 + (1-eta)*||X_n - X0_n||^2 ];
    the returned gradients are complex matrices dL/dRe(X) + j*dL/dIm(X).
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    batch = len(samples)
    if batch == 0:
        raise ValueError("empty batch")
    total = 0.0
    grads = []
    for X, sample in zip(predictions, samples):
        Hm = sample.H.entries if isinstance(sample.H, ChannelMatrix) else np.asarray(sample.H)
        X0m = sample.X0.X if isinstance(sample.X0, WaveformDesign) else np.asarray(sample.X0)
        comm = Hm @ X - sample.D
        sens = X - X0m
        total += weight * np.linalg.norm(comm) ** 2 + (1 - weight) * np.linalg.norm(sens) ** 2
        grads.append((2.0 / batch) * (weight * Hm.conj().T @ comm + (1 - weight) * sens))
    return total / batch, grads


# ------------------------------------------------------------------- dataset


def make_dataset(num_samples: int, num_antennas: int, num_users: int,
                 frame_length: int, rng: np.random.Generator,
                 total_power: float = 1.0, reference: str = "omni",
                 target_angles=None, rician_factors=None):
    """Draw (H, D, X0) triples: Rician users on evenly spaced departure
    angles, QPSK symbols, and a covariance-constrained reference waveform."""
    if frame_length < num_antennas:
        raise ValueError("frame length must be at least the antenna count")
    geom = ArrayGeometry(num_antennas)
    if rician_factors is None:
        rician_factors = DEFAULT_RICIAN_FACTORS
    if len(rician_factors) < num_users:
        raise ValueError("need a Rician factor per user")
    angles = np.linspace(-np.pi / 3, np.pi / 3, num_users) if num_users > 1 else [0.0]
    users = [RicianParams(rician_factor=rician_factors[k], departure_angle=angles[k])
             for k in range(num_users)]

    if reference == "omni":
        template = reference_covariance_omni(total_power, num_antennas)
    elif reference == "directional":
        if target_angles is None:
            raise ValueError("directional reference needs target_angles")
        template = directional_covariance(target_angles, total_power, geom)
    else:
        raise ValueError("reference must be omni or directional")

    qpsk = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
    samples = []
    for _ in range(num_samples):
        H = sample_channel_matrix(users, geom, rng)
        D = qpsk[rng.integers(0, 4, size=(num_users, frame_length))]
        X0 = procrustes_waveform(template, H, D, frame_length, provenance=reference)
        samples.append(WaveformSample(H=H, D=D, X0=X0))
    return samples


def split_dataset(num_samples: int, rng: np.random.Generator):
    """Seeded 60/20/20 train/validation/test index split."""
    perm = rng.permutation(num_samples)
    n_train = int(round(0.6 * num_samples))
    n_val = int(round(0.2 * num_samples))
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def save_dataset(samples, path: str) -> None:
    """Binary cache: counts header then contiguous complex arrays per sample."""
    if not samples:
        raise ValueError("nothing to save")
    M, K, tau = samples[0].dims
    power = samples[0].X0.power if isinstance(samples[0].X0, WaveformDesign) else 0.0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIIId", _VERSION, len(samples), M, K, tau, power))
        for s in samples:
            if s.dims != (M, K, tau):
                raise ValueError("mixed sample shapes in dataset")
            Hm = s.H.entries if isinstance(s.H, ChannelMatrix) else np.asarray(s.H, complex)
            X0m = s.X0.X if isinstance(s.X0, WaveformDesign) else np.asarray(s.X0, complex)
            prov = s.X0.provenance if isinstance(s.X0, WaveformDesign) else "learned"
            if isinstance(s.H, ChannelMatrix):
                params = np.array([[p.rician_factor, p.large_scale_gain, p.departure_angle]
                                   for p in s.H.per_user_params])
            else:
                params = np.full((K, 3), np.nan)
            fh.write(struct.pack("<B", PROVENANCES.index(prov)))
            for arr in (Hm, np.asarray(s.D, complex), X0m):
                fh.write(np.ascontiguousarray(arr, dtype=np.complex128).tobytes())
            fh.write(np.ascontiguousarray(params, dtype=np.float64).tobytes())


def load_dataset(path: str):
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a waveform dataset file")
        version, count, M, K, tau, power = struct.unpack("<IIIIId", fh.read(28))
        if version != _VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        samples = []
        for _ in range(count):
            prov = PROVENANCES[struct.unpack("<B", fh.read(1))[0]]
            Hm = np.frombuffer(fh.read(16 * K * M), dtype=np.complex128).reshape(K, M)
            D = np.frombuffer(fh.read(16 * K * tau), dtype=np.complex128).reshape(K, tau)
            X0m = np.frombuffer(fh.read(16 * M * tau), dtype=np.complex128).reshape(M, tau)
            params = np.frombuffer(fh.read(8 * K * 3), dtype=np.float64).reshape(K, 3)
            if np.isnan(params).any():
                H = Hm
            else:
                H = ChannelMatrix(Hm, tuple(
                    RicianParams(rician_factor=p[0], large_scale_gain=p[1],
                                 departure_angle=p[2]) for p in params))
            X0 = WaveformDesign(X0m, power, prov) if power > 0 else X0m
            samples.append(WaveformSample(H=H, D=D, X0=X0))
    return samples


# ------------------------------------------------------------------ training


def _power_of(samples) -> float:
    powers = {s.X0.power for s in samples if isinstance(s.X0, WaveformDesign)}
    if len(powers) != 1:
        raise ValueError("dataset must carry one common power budget")
    return powers.pop()


_QPSK_PHASES = np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])


def symmetry_augment(sample: WaveformSample, rng: np.random.Generator) -> WaveformSample:
    """Random column permutation plus per-column QPSK phase rotation.

    Both loss terms are column-separable, so the per-sample optimum maps
    along with (D, X0); the transformed sample is distributed exactly like a
    fresh draw sharing the same channel. Phases stay in the QPSK alphabet
    and the rotation is exact in floating point (re/im swaps and sign flips).
    """
    tau = np.asarray(sample.D).shape[1]
    phases = _QPSK_PHASES[rng.integers(0, 4, tau)]
    perm = rng.permutation(tau)
    D = (np.asarray(sample.D) * phases)[:, perm]
    X0m = sample.X0.X if isinstance(sample.X0, WaveformDesign) else np.asarray(sample.X0)
    X0m = (X0m * phases)[:, perm]
    X0 = (dataclasses.replace(sample.X0, X=X0m)
          if isinstance(sample.X0, WaveformDesign) else X0m)
    return WaveformSample(H=sample.H, D=D, X0=X0)


def train_waveform_net(dataset, weight: float, config: TrainConfig,
                       rng: np.random.Generator | None = None,
                       augment: bool = False,
                       init_model: MlpModel | None = None):
    """Unsupervised training of the waveform net on a 60/20/20 split.

    Returns (model, history, (train_idx, val_idx, test_idx)). Early stopping
    defaults to patience 20 when the config does not set one. With augment,
    each training batch is rewritten through symmetry_augment before the
    forward pass; validation batches are left untouched. init_model warm
    starts from an earlier phase (e.g. a weight-0 copy pretrain); passing the
    same seed keeps the split identical across phases.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    if len(dataset) < config.batch_size:
        raise ValueError("dataset smaller than one batch")
    if config.early_stop_patience is None:
        config = dataclasses.replace(config, early_stop_patience=20)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    total_power = _power_of(dataset)
    M, K, tau = dataset[0].dims

    spec = WaveformNetSpec(M, K, tau)
    # build() always runs so the rng stream (and with it the seeded split
    # below) is the same whether or not a warm start replaces the model
    model = spec.build(rng)
    if init_model is not None:
        if [W.shape for W in init_model.weights] != [W.shape for W in model.weights]:
            raise ValueError("init_model does not match the problem dims")
        model = init_model.copy()
    features = np.stack([build_features(s) for s in dataset])
    train_idx, val_idx, test_idx = split_dataset(len(dataset), rng)

    def loss_fn(out, aux):
        frames = [power_projection(row, total_power, tau) for row in out]
        value, grads = isac_waveform_loss(frames, aux, weight)
        grad_rows = np.stack([
            _projection_vjp(row, g, total_power, tau)
            for row, g in zip(out, grads)])
        return value, grad_rows

    transform = None
    if augment:
        def transform(rows, batch, rng_t):
            fresh = [symmetry_augment(s, rng_t) for s in batch]
            feats = np.stack([build_features(s) for s in fresh])
            aux = np.empty(len(fresh), dtype=object)
            aux[:] = fresh
            return feats, aux

    samples = np.empty(len(dataset), dtype=object)
    samples[:] = dataset
    model, history = train(
        model, features[train_idx], samples[train_idx], loss_fn, config,
        val_inputs=features[val_idx], val_aux=samples[val_idx],
        batch_transform=transform)
    return model, history, (train_idx, val_idx, test_idx)


def predict_waveform(model: MlpModel, sample: WaveformSample,
                     total_power: float | None = None) -> WaveformDesign:
    """Forward pass plus projection; the power inequality always holds."""
    if total_power is None:
        if not isinstance(sample.X0, WaveformDesign):
            raise ValueError("total_power needed when X0 carries none")
        total_power = sample.X0.power
    _, _, tau = sample.dims
    raw = predict(model, build_features(sample)[None, :])[0]
    X = power_projection(raw, total_power, tau)
    return WaveformDesign(X, total_power, "learned")
