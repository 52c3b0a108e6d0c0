"""Constellation autoencoder: loss oracles, gradient checks, receiver
closed forms, calibration round trips, and small training runs."""

import numpy as np
import pytest
from scipy.stats import norm

from isackit.constellation_ae import (
    Constellation,
    IsacAutoencoder,
    amplitude_spread,
    baseline_constellation,
    build_isac_ae,
    calibrate_comm_noise,
    calibrate_radar_noise,
    combined_step,
    comm_loss,
    detection_statistic,
    evaluate_isac,
    export_constellation,
    extract_constellation,
    message_bits,
    ml_decode,
    normalize_symbols,
    normalize_vjp,
    radar_loss,
    sample_training_batch,
    threshold_for_pfa,
    train_isac_ae,
)
from isackit.neural import TrainConfig, predict


def qfunc(x):
    return norm.sf(x)


# ----------------------------------------------------------------- messages


def test_message_bits_little_endian():
    bits = message_bits([6], 3)
    assert np.array_equal(bits, [[0.0, 1.0, 1.0]])


def test_message_bits_round_trip():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 32, size=50)
    bits = message_bits(labels, 5)
    back = bits @ (2 ** np.arange(5))
    assert np.array_equal(back.astype(int), labels)


# ------------------------------------------------------------- loss oracles


def test_comm_loss_uniform_prediction_is_log_m():
    probs = np.full((5, 8), 1.0 / 8.0)
    value, _ = comm_loss(probs, np.arange(5), "softmax")
    assert abs(value - np.log(8.0)) < 1e-12


def test_comm_loss_perfect_prediction_is_zero():
    probs = np.eye(4)[[2, 0, 3]]
    value, _ = comm_loss(probs, [2, 0, 3], "softmax")
    assert value < 1e-9


def test_comm_loss_matches_direct_sum():
    rng = np.random.default_rng(1)
    probs = rng.dirichlet(np.ones(8), size=6)
    labels = rng.integers(0, 8, size=6)
    value, _ = comm_loss(probs, labels, "softmax")
    oracle = -sum(np.log(probs[i, labels[i]]) for i in range(6)) / 6.0
    assert abs(value - oracle) < 1e-12


def test_comm_loss_softmax_gradient_fd():
    rng = np.random.default_rng(2)
    probs = 0.05 + 0.9 * rng.random((4, 5))
    labels = rng.integers(0, 5, size=4)
    _, grad = comm_loss(probs, labels, "softmax")
    h = 1e-7
    for i, j in [(0, labels[0]), (2, labels[2]), (1, 3)]:
        pp = probs.copy()
        pm = probs.copy()
        pp[i, j] += h
        pm[i, j] -= h
        fd = (comm_loss(pp, labels, "softmax")[0]
              - comm_loss(pm, labels, "softmax")[0]) / (2 * h)
        assert abs(grad[i, j] - fd) < 1e-6 * max(1.0, abs(fd))


def test_comm_loss_bits_matches_direct_sum():
    rng = np.random.default_rng(3)
    probs = 0.05 + 0.9 * rng.random((7, 4))
    bits = rng.integers(0, 2, size=(7, 4)).astype(float)
    value, grad = comm_loss(probs, bits, "bits")
    oracle = 0.0
    for i in range(7):
        for j in range(4):
            m = bits[i, j]
            oracle -= m * np.log(probs[i, j]) + (1 - m) * np.log(1 - probs[i, j])
    assert abs(value - oracle / 7.0) < 1e-12
    h = 1e-7
    pp = probs.copy()
    pm = probs.copy()
    pp[3, 1] += h
    pm[3, 1] -= h
    fd = (comm_loss(pp, bits, "bits")[0] - comm_loss(pm, bits, "bits")[0]) / (2 * h)
    assert abs(grad[3, 1] - fd) < 1e-6 * max(1.0, abs(fd))


def test_comm_loss_rejects_unknown_mode():
    with pytest.raises(ValueError):
        comm_loss(np.ones((1, 2)), [0], "argmax")


def test_radar_loss_matched_and_uniform():
    value, _ = radar_loss(np.array([1.0, 0.0, 1.0]), np.array([1, 0, 1]))
    assert value < 1e-9
    value, _ = radar_loss(np.full(9, 0.5), np.arange(9) % 2)
    assert abs(value - np.log(2.0)) < 1e-12


def test_radar_loss_matches_direct_sum_and_fd():
    rng = np.random.default_rng(4)
    outputs = 0.05 + 0.9 * rng.random(11)
    flags = rng.integers(0, 2, size=11)
    value, grad = radar_loss(outputs, flags)
    oracle = -np.mean([f * np.log(o) + (1 - f) * np.log(1 - o)
                       for o, f in zip(outputs, flags)])
    assert abs(value - oracle) < 1e-12
    h = 1e-7
    op = outputs.copy()
    om = outputs.copy()
    op[5] += h
    om[5] -= h
    fd = (radar_loss(op, flags)[0] - radar_loss(om, flags)[0]) / (2 * h)
    assert abs(grad[5] - fd) < 1e-6 * max(1.0, abs(fd))


# ------------------------------------------------------------ normalization


def test_normalize_symbols_unit_power():
    rng = np.random.default_rng(5)
    raw = 3.0 * rng.standard_normal((40, 2))
    x, scale = normalize_symbols(raw)
    assert abs(np.mean(np.sum(x ** 2, axis=1)) - 1.0) < 1e-12
    assert np.allclose(raw / scale, x)
    with pytest.raises(ValueError):
        normalize_symbols(np.zeros((3, 2)))


def test_normalize_vjp_matches_fd():
    rng = np.random.default_rng(6)
    raw = rng.standard_normal((5, 2))
    A = rng.standard_normal((5, 2))

    def loss(r):
        x, _ = normalize_symbols(r)
        return float(np.sum(A * x))

    x, scale = normalize_symbols(raw)
    grad = normalize_vjp(x, scale, A)
    h = 1e-6
    for i, j in [(0, 0), (2, 1), (4, 0)]:
        rp = raw.copy()
        rm = raw.copy()
        rp[i, j] += h
        rm[i, j] -= h
        fd = (loss(rp) - loss(rm)) / (2 * h)
        assert abs(grad[i, j] - fd) < 1e-7 * max(1.0, abs(fd))


# ----------------------------------------------------------------- sampling


def test_sample_batch_zero_comm_noise_returns_encoder_output():
    rng = np.random.default_rng(7)
    ae = build_isac_ae(3, 0.5, 0.0, 0.4, rng)
    labels, y, z, T = sample_training_batch(ae.encoder, 64, 0.0, 0.4,
                                            np.random.default_rng(8))
    x, _ = normalize_symbols(predict(ae.encoder, message_bits(labels, 3)))
    assert np.allclose(y, x)
    assert set(np.unique(T)) <= {0, 1}
    assert z.shape == (64, 2)


def test_sample_batch_absent_target_noise_power():
    rng = np.random.default_rng(9)
    ae = build_isac_ae(2, 0.5, 0.1, 0.7, rng)
    labels, _, z, T = sample_training_batch(ae.encoder, 200_000, 0.1, 0.7,
                                            np.random.default_rng(10))
    power = np.sum(z[T == 0] ** 2, axis=1)
    assert abs(np.mean(power) - 0.7) < 0.02
    assert labels.min() >= 0 and labels.max() < 4


def test_sample_batch_k5_covers_all_messages():
    rng = np.random.default_rng(11)
    ae = build_isac_ae(5, 0.5, 0.1, 0.1, rng)
    labels, _, _, _ = sample_training_batch(ae.encoder, 5000, 0.1, 0.1,
                                            np.random.default_rng(12))
    assert set(labels.tolist()) == set(range(32))


# ------------------------------------------------- end-to-end gradient flow


def _fd_combined(ae, param, index, labels, T, nc, nr, h=1e-6):
    old = param[index]
    param[index] = old + h
    up = combined_step(ae, labels, T, nc, nr)[0]
    param[index] = old - h
    down = combined_step(ae, labels, T, nc, nr)[0]
    param[index] = old
    return (up - down) / (2 * h)


@pytest.mark.parametrize("head", ["softmax", "bits"])
def test_combined_step_gradients_match_fd(head):
    rng = np.random.default_rng(13)
    ae = build_isac_ae(2, 0.6, 0.3, 0.5, rng, comm_head=head)
    data = np.random.default_rng(14)
    labels = data.integers(0, 4, size=6)
    T = data.integers(0, 2, size=6)
    nc = 0.4 * data.standard_normal((6, 2))
    nr = 0.5 * data.standard_normal((6, 2))
    _, enc_g, dec_g, det_g = combined_step(ae, labels, T, nc, nr)
    checks = [(ae.encoder.weights[0], enc_g[0][0]),
              (ae.encoder.weights[3], enc_g[3][0]),
              (ae.comm_decoder.weights[1], dec_g[1][0]),
              (ae.radar_detector.weights[2], det_g[2][0]),
              (ae.radar_detector.biases[3], det_g[3][1])]
    for param, grad in checks:
        flat = np.argmax(np.abs(grad))
        index = np.unravel_index(flat, grad.shape)
        fd = _fd_combined(ae, param, index, labels, T, nc, nr)
        assert abs(grad[index] - fd) < 1e-5 * max(1.0, abs(fd))


def test_encoder_gradient_is_alive():
    rng = np.random.default_rng(15)
    ae = build_isac_ae(2, 0.5, 0.2, 0.4, rng)
    data = np.random.default_rng(16)
    labels = data.integers(0, 4, size=32)
    T = data.integers(0, 2, size=32)
    nc = 0.3 * data.standard_normal((32, 2))
    nr = 0.4 * data.standard_normal((32, 2))
    _, enc_g, _, _ = combined_step(ae, labels, T, nc, nr)
    for dw, db in enc_g:
        assert np.max(np.abs(dw)) > 0
    assert sum(np.sum(dw ** 2) for dw, _ in enc_g) > 0


# ------------------------------------------------------------ constellation


def test_constellation_validation():
    with pytest.raises(ValueError):
        Constellation(np.array([2.0 + 0j, 0j]), np.array([0, 1]), 1.0)
    with pytest.raises(ValueError):
        Constellation(np.array([1j, 1.0 + 0j]), np.array([0, 2]), 1.0)
    ok = Constellation(np.array([1j, -1j]), np.array([1, 0]), 1.0)
    assert ok.size == 2


def test_extract_constellation_unit_power_and_deterministic():
    rng = np.random.default_rng(17)
    ae = build_isac_ae(4, 0.5, 0.1, 0.1, rng)
    c1 = extract_constellation(ae)
    c2 = extract_constellation(ae)
    assert c1.size == 16
    assert abs(np.mean(np.abs(c1.points) ** 2) - 1.0) < 1e-9
    assert np.array_equal(c1.points, c2.points)


def test_baseline_psk_and_qam():
    psk = baseline_constellation("PSK", 32)
    assert np.allclose(np.abs(psk.points), 1.0)
    assert amplitude_spread(psk) < 1e-12
    qam = baseline_constellation("QAM", 32)
    assert qam.size == 32
    assert abs(np.mean(np.abs(qam.points) ** 2) - 1.0) < 1e-9
    corner = np.max(np.abs(qam.points.real)) + 1j * np.max(np.abs(qam.points.imag))
    dist = np.min(np.abs(qam.points - corner))
    assert dist > 0.1
    assert amplitude_spread(qam) > 0.15
    square = baseline_constellation("QAM", 16)
    lv = np.array([-3.0, -1.0, 1.0, 3.0])
    grid = (lv[:, None] + 1j * lv[None, :]).ravel()
    grid /= np.sqrt(np.mean(np.abs(grid) ** 2))
    assert np.allclose(sorted(square.points, key=lambda p: (p.real, p.imag)),
                       sorted(grid, key=lambda p: (p.real, p.imag)))
    with pytest.raises(ValueError):
        baseline_constellation("QAM", 12)
    with pytest.raises(ValueError):
        baseline_constellation("APSK", 16)


def test_export_constellation_format(tmp_path):
    const = Constellation(np.array([1j, -1j]), np.array([1, 0]), 1.0)
    path = tmp_path / "points.csv"
    export_constellation(const, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "label,re,im"
    assert lines[1] == "0,-0,-1"
    assert lines[2] == "1,0,1"


# -------------------------------------------------------------- receivers


def test_ml_decode_noiseless_is_exact():
    pts = baseline_constellation("QAM", 16).points
    idx = np.arange(16)
    assert np.array_equal(ml_decode(pts[idx], pts), idx)


def test_qpsk_ser_matches_closed_form():
    const = baseline_constellation("PSK", 4)
    var = 0.5
    ser, _, _ = evaluate_isac(const, var, 1.0, 50.0, 200_000,
                              np.random.default_rng(18))
    gamma = 1.0 / var
    q = qfunc(np.sqrt(gamma))
    closed = 2 * q - q ** 2
    assert abs(ser - closed) < 0.004


def test_single_point_detection_matches_gaussian_closed_form():
    const = Constellation(np.array([1.0 + 0j]), np.array([0]), 1.0)
    var = 1.0
    pfa = 0.1
    rng = np.random.default_rng(19)
    thr = threshold_for_pfa(const, var, pfa, 200_000, rng)
    _, pd, pfa_hat = evaluate_isac(const, 0.1, var, thr, 200_000, rng)
    closed = qfunc(norm.isf(pfa) - np.sqrt(2.0 / var))
    assert abs(pd - closed) < 0.01
    assert abs(pfa_hat - pfa) < 0.01


def test_detection_statistic_blocking_is_invisible():
    rng = np.random.default_rng(20)
    pts = baseline_constellation("PSK", 8).points
    z = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    a = detection_statistic(z, pts, 0.5, block=64)
    b = detection_statistic(z, pts, 0.5, block=100000)
    assert np.allclose(a, b, atol=1e-12)


def test_evaluate_isac_zero_noise_ser_and_warning():
    const = baseline_constellation("PSK", 8)
    with pytest.warns(UserWarning):
        ser, _, _ = evaluate_isac(const, 0.0, 1.0, 10.0, 1000,
                                  np.random.default_rng(21))
    assert ser == 0.0


# ------------------------------------------------------------- calibration


def test_calibrate_comm_noise_round_trip():
    const = baseline_constellation("PSK", 4)
    rng = np.random.default_rng(22)
    var = calibrate_comm_noise(const, 0.05, 50_000, rng)
    ser, _, _ = evaluate_isac(const, var, 1.0, 50.0, 100_000,
                              np.random.default_rng(23))
    assert abs(ser - 0.05) < 0.005


def test_calibrate_radar_noise_round_trip():
    const = baseline_constellation("PSK", 4)
    rng = np.random.default_rng(24)
    var, thr = calibrate_radar_noise(const, 0.6, 0.1, 30_000, rng)
    _, pd, pfa = evaluate_isac(const, 0.1, var, thr, 100_000,
                               np.random.default_rng(25))
    assert abs(pd - 0.6) < 0.02
    assert abs(pfa - 0.1) < 0.01


def test_calibration_bracket_errors():
    const = baseline_constellation("PSK", 4)
    with pytest.raises(ValueError):
        calibrate_comm_noise(const, 0.97, 20_000, np.random.default_rng(26))
    with pytest.raises(ValueError):
        calibrate_radar_noise(const, 0.9999, 0.1, 20_000,
                              np.random.default_rng(27), lo=1.0, hi=4.0)


# ----------------------------------------------------------------- training


def test_train_rejects_bad_weight():
    cfg = TrainConfig(epochs=1, batch_size=10, lr=1e-3, seed=0)
    with pytest.raises(ValueError):
        train_isac_ae(1.5, 2, 0.1, 0.1, cfg, samples_per_epoch=20)
    with pytest.raises(ValueError):
        train_isac_ae(-0.1, 2, 0.1, 0.1, cfg, samples_per_epoch=20)


@pytest.fixture(scope="module")
def tiny_trained():
    cfg = TrainConfig(epochs=8, batch_size=100, lr=1e-3, seed=28)
    return train_isac_ae(0.5, 2, 0.2, 0.4, cfg, samples_per_epoch=2000)


def test_training_reduces_combined_loss(tiny_trained):
    rng = np.random.default_rng(29)
    fresh = build_isac_ae(2, 0.5, 0.2, 0.4, np.random.default_rng(28))
    labels = rng.integers(0, 4, size=500)
    T = rng.integers(0, 2, size=500)
    nc = np.sqrt(0.2 / 2) * rng.standard_normal((500, 2))
    nr = np.sqrt(0.4 / 2) * rng.standard_normal((500, 2))
    before = combined_step(fresh, labels, T, nc, nr)[0]
    after = combined_step(tiny_trained, labels, T, nc, nr)[0]
    assert after < before


def test_training_deterministic_given_seed(tiny_trained):
    cfg = TrainConfig(epochs=8, batch_size=100, lr=1e-3, seed=28)
    again = train_isac_ae(0.5, 2, 0.2, 0.4, cfg, samples_per_epoch=2000)
    assert np.array_equal(extract_constellation(again).points,
                          extract_constellation(tiny_trained).points)


def test_detector_outputs_strictly_inside_unit_interval(tiny_trained):
    rng = np.random.default_rng(30)
    z = 2.0 * rng.standard_normal((400, 2))
    out = predict(tiny_trained.radar_detector, z)
    assert np.all(out > 0.0) and np.all(out < 1.0)


@pytest.fixture(scope="module")
def comm_trained():
    cfg = TrainConfig(epochs=40, batch_size=250, lr=1e-3, seed=31)
    return train_isac_ae(0.0, 4, 0.05, 0.5, cfg, samples_per_epoch=10_000)


def test_learned_points_pairwise_distinct(comm_trained):
    pts = extract_constellation(comm_trained).points
    diff = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(diff, np.inf)
    assert diff.min() > 1e-3


def test_comm_only_training_approaches_qam(comm_trained):
    qam = baseline_constellation("QAM", 16)
    rng = np.random.default_rng(32)
    var = calibrate_comm_noise(qam, 0.05, 50_000, rng)
    learned = extract_constellation(comm_trained)
    ser_l, _, _ = evaluate_isac(learned, var, 1.0, 50.0, 50_000,
                                np.random.default_rng(33))
    ser_q, _, _ = evaluate_isac(qam, var, 1.0, 50.0, 50_000,
                                np.random.default_rng(33))
    assert ser_l <= 1.5 * ser_q


def test_radar_heavy_weight_tightens_amplitude_spread():
    comm_cfg = TrainConfig(epochs=15, batch_size=200, lr=1e-3, seed=34)
    radar_cfg = TrainConfig(epochs=15, batch_size=200, lr=1e-3, seed=34)
    comm = train_isac_ae(0.05, 3, 0.1, 0.5, comm_cfg, samples_per_epoch=6000)
    radar = train_isac_ae(0.95, 3, 0.1, 0.5, radar_cfg, samples_per_epoch=6000)
    spread_c = amplitude_spread(extract_constellation(comm))
    spread_r = amplitude_spread(extract_constellation(radar))
    assert spread_r < spread_c
