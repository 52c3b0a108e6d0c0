import itertools

import numpy as np
import pytest

from isackit.neural import (
    ACTIVATIONS,
    AdamState,
    MlpModel,
    TrainConfig,
    adam_step,
    backward,
    backward_pass,
    forward,
    forward_pass,
    init_adam,
    init_mlp,
    load_model,
    predict,
    save_model,
    train,
)


def _squared_loss(out, target):
    diff = out - target
    return 0.5 * np.sum(diff**2), diff


def _fd_param_grads(model, batch, target, h=1e-6):
    grads = []
    for W in model.weights + model.biases:
        g = np.zeros_like(W)
        it = np.nditer(W, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = W[idx]
            W[idx] = orig + h
            lp, _ = _squared_loss(predict(model, batch), target)
            W[idx] = orig - h
            lm, _ = _squared_loss(predict(model, batch), target)
            W[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads[: len(model.weights)], grads[len(model.weights):]


def test_forward_zero_relu_net():
    model = MlpModel(
        [np.zeros((3, 4)), np.zeros((4, 2))],
        [np.zeros(4), np.zeros(2)],
        ["relu", "relu"],
    )
    out = predict(model, np.ones((5, 3)))
    assert np.all(out == 0.0)


def test_forward_identity_linear_layer():
    model = MlpModel([np.eye(4)], [np.zeros(4)], ["linear"])
    x = np.arange(12, dtype=float).reshape(3, 4)
    assert np.array_equal(predict(model, x), x)


def test_forward_softmax_rows_sum_to_one(rng):
    model = init_mlp([3, 6, 4], ["relu", "softmax"], rng)
    out = predict(model, rng.standard_normal((7, 3)))
    assert np.max(np.abs(out.sum(axis=1) - 1.0)) < 1e-9
    acts = forward(model, rng.standard_normal((2, 3)))
    assert len(acts) == 3  # input + two layers


def test_backward_linear_closed_form(rng):
    # L = 0.5 ||XW - Y||^2 / 1: dW = X^T (XW - Y)
    model = init_mlp([4, 3], ["linear"], rng)
    X = rng.standard_normal((6, 4))
    Y = rng.standard_normal((6, 3))
    out = predict(model, X)
    grads, _ = backward(model, X, out - Y)
    expected = X.T @ (X @ model.weights[0] - Y)
    assert np.allclose(grads[0][0], expected, atol=1e-12)
    assert np.allclose(grads[0][1], (out - Y).sum(axis=0), atol=1e-12)


@pytest.mark.parametrize("acts", list(itertools.product(ACTIVATIONS, repeat=2)))
def test_backward_matches_finite_differences(acts, rng):
    model = init_mlp([4, 6, 5], list(acts), rng)
    batch = rng.standard_normal((3, 4))
    target = rng.uniform(0.1, 0.9, (3, 5))  # keep softmax/sigmoid targets interior
    out, cache = forward_pass(model, batch)
    _, grad_out = _squared_loss(out, target)
    analytic, _ = backward_pass(model, cache, grad_out)
    fd_w, fd_b = _fd_param_grads(model, batch, target)
    for i in range(2):
        for a, f in ((analytic[i][0], fd_w[i]), (analytic[i][1], fd_b[i])):
            denom = max(np.linalg.norm(f), 1e-12)
            assert np.linalg.norm(a - f) / denom < 1e-5


def test_backward_input_gradient_matches_fd(rng):
    model = init_mlp([4, 5, 3], ["tanh", "sigmoid"], rng)
    batch = rng.standard_normal((2, 4))
    target = rng.uniform(0.2, 0.8, (2, 3))
    out, cache = forward_pass(model, batch)
    _, grad_out = _squared_loss(out, target)
    _, grad_in = backward_pass(model, cache, grad_out)
    h = 1e-6
    fd = np.zeros_like(batch)
    for i in range(batch.shape[0]):
        for j in range(batch.shape[1]):
            orig = batch[i, j]
            batch[i, j] = orig + h
            lp, _ = _squared_loss(predict(model, batch), target)
            batch[i, j] = orig - h
            lm, _ = _squared_loss(predict(model, batch), target)
            batch[i, j] = orig
            fd[i, j] = (lp - lm) / (2 * h)
    assert np.linalg.norm(grad_in - fd) / np.linalg.norm(fd) < 1e-5


def test_backward_zero_upstream_gives_zero_grads(rng):
    model = init_mlp([3, 4, 2], ["relu", "tanh"], rng)
    batch = rng.standard_normal((5, 3))
    grads, grad_in = backward(model, batch, np.zeros((5, 2)))
    assert all(np.all(dW == 0) and np.all(db == 0) for dW, db in grads)
    assert np.all(grad_in == 0)


def test_backward_shape_mismatch(rng):
    model = init_mlp([3, 2], ["linear"], rng)
    with pytest.raises(ValueError):
        backward(model, rng.standard_normal((4, 3)), np.zeros((4, 3)))


def test_softmax_cross_entropy_combined_gradient(rng):
    # upstream dL/dp = -onehot/p for CE; through the softmax VJP this must
    # collapse to (p - onehot)
    model = init_mlp([3, 4], ["softmax"], rng)
    batch = rng.standard_normal((6, 3))
    out, cache = forward_pass(model, batch)
    onehot = np.zeros_like(out)
    onehot[np.arange(6), rng.integers(0, 4, 6)] = 1.0
    grads, _ = backward_pass(model, cache, -onehot / out)
    direct = batch.T @ (out - onehot)
    assert np.allclose(grads[0][0], direct, atol=1e-9)


def test_adam_zero_gradient_keeps_parameters(rng):
    model = init_mlp([3, 2], ["linear"], rng)
    before = model.copy()
    state = init_adam(model, lr=0.1)
    zero = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(model.weights, model.biases)]
    adam_step(state, model, zero)
    assert state.step_count == 1
    assert np.array_equal(model.weights[0], before.weights[0])
    assert np.array_equal(model.biases[0], before.biases[0])


def test_adam_constant_gradient_step_approaches_lr():
    # scalar recurrence oracle: with constant g, bias-corrected Adam step size
    # tends to lr * g / |g| = lr
    model = MlpModel([np.array([[1.0]])], [np.zeros(1)], ["linear"])
    state = init_adam(model, lr=0.01)
    g = [(np.array([[0.37]]), np.zeros(1))]
    prev = model.weights[0][0, 0]
    for _ in range(400):
        adam_step(state, model, g)
        step = prev - model.weights[0][0, 0]
        prev = model.weights[0][0, 0]
    assert abs(step - 0.01) < 1e-4
    assert state.step_count == 400


def test_train_at_minimum_keeps_parameters(rng):
    model = init_mlp([2, 2], ["linear"], rng)
    before = model.copy()

    def flat_loss(out, aux):
        return 0.0, np.zeros_like(out)

    cfg = TrainConfig(epochs=3, batch_size=4, lr=0.1, seed=0)
    train(model, rng.standard_normal((8, 2)), None, flat_loss, cfg)
    assert np.array_equal(model.weights[0], before.weights[0])


def test_train_quadratic_bowl_reaches_optimum(rng):
    # fit y = x A with a single linear layer; optimum loss is exactly 0
    A = rng.standard_normal((3, 2))
    X = rng.standard_normal((64, 3))
    Y = X @ A
    model = init_mlp([3, 2], ["linear"], rng)

    def loss(out, target):
        diff = out - target
        return float(np.mean(diff**2)), 2 * diff / diff.size

    cfg = TrainConfig(epochs=600, batch_size=16, lr=0.02, seed=1)
    model, history = train(model, X, Y, loss, cfg)
    assert history["train"][-1] < 1e-6 or np.min(history["train"]) < 1e-6


def test_train_same_seed_same_history(rng):
    X = rng.standard_normal((32, 3))
    Y = rng.standard_normal((32, 2))

    def loss(out, target):
        diff = out - target
        return float(np.mean(diff**2)), 2 * diff / diff.size

    runs = []
    for _ in range(2):
        model = init_mlp([3, 5, 2], ["tanh", "linear"], np.random.default_rng(11))
        cfg = TrainConfig(epochs=5, batch_size=8, lr=0.01, seed=42)
        _, history = train(model, X, Y, loss, cfg)
        runs.append(history["train"])
    assert np.array_equal(runs[0], runs[1])


def test_train_empty_dataset_rejected(rng):
    model = init_mlp([3, 2], ["linear"], rng)
    with pytest.raises(ValueError, match="empty"):
        train(model, np.zeros((0, 3)), None, lambda o, a: (0.0, o), TrainConfig(1, 1))


def test_train_batch_transform_sees_every_training_batch(rng):
    X = rng.standard_normal((32, 3))
    Y = rng.standard_normal((32, 2))
    calls = []

    def passthrough(batch_in, batch_aux, t_rng):
        calls.append(batch_in.shape[0])
        assert isinstance(t_rng, np.random.Generator)
        return batch_in, batch_aux

    def loss(out, target):
        diff = out - target
        return float(np.mean(diff**2)), 2 * diff / diff.size

    model = init_mlp([3, 2], ["linear"], rng)
    cfg = TrainConfig(epochs=3, batch_size=8, lr=0.01, seed=0)
    train(model, X, Y, loss, cfg, val_inputs=X, val_aux=Y,
          batch_transform=passthrough)
    # 4 batches per epoch, 3 epochs; validation passes bypass the transform
    assert calls == [8] * 12


def test_early_stopping_restores_best_snapshot(rng):
    # adversarial loss: improves for 3 epochs then worsens; best snapshot must
    # be the epoch-3 model, and training must stop before the epoch budget
    X = rng.standard_normal((16, 2))
    Y = X @ rng.standard_normal((2, 2))
    model = init_mlp([2, 2], ["linear"], rng)

    def loss(out, target):
        diff = out - target
        return float(np.mean(diff**2)), 2 * diff / diff.size

    cfg = TrainConfig(epochs=200, batch_size=8, lr=0.05, early_stop_patience=5, seed=3)
    model, history = train(model, X, Y, loss, cfg, val_inputs=X, val_aux=Y)
    final_val, _ = loss(predict(model, X), Y)
    assert np.isclose(final_val, np.min(history["val"]), atol=1e-12)


def test_save_load_round_trip(tmp_path, rng):
    model = init_mlp([4, 7, 3], ["relu", "softmax"], rng)
    path = tmp_path / "model.bin"
    save_model(model, str(path))
    back = load_model(str(path))
    assert back.activations == model.activations
    for a, b in zip(model.weights + model.biases, back.weights + back.biases):
        assert np.array_equal(a, b)
    with pytest.raises(ValueError, match="not a model file"):
        bad = tmp_path / "junk.bin"
        bad.write_bytes(b"nope" + b"\x00" * 16)
        load_model(str(bad))


def test_model_validation():
    with pytest.raises(ValueError, match="chain"):
        MlpModel([np.zeros((3, 4)), np.zeros((5, 2))], [np.zeros(4), np.zeros(2)],
                 ["relu", "linear"])
    with pytest.raises(ValueError, match="unknown activation"):
        MlpModel([np.zeros((3, 4))], [np.zeros(4)], ["swish"])
