import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgann.network import (
    Activation,
    Architecture,
    DataSplit,
    NetworkError,
    TrainConfig,
    TrainingDiverged,
    flatten,
    forward,
    gradient,
    init_weights,
    mse,
    train,
    train_bp,
    train_scg,
    unflatten,
)

ACTS = list(Activation)


def random_arch(rng, input_dim=None, output_dim=None):
    n = int(rng.integers(1, 4))
    hidden = tuple((int(rng.integers(1, 13)), ACTS[int(rng.integers(3))]) for _ in range(n))
    return Architecture(input_dim or int(rng.integers(1, 6)), output_dim or int(rng.integers(1, 4)), hidden)


def finite_difference(arch, weights, batch, h=1e-5):
    x, t = batch
    vec = flatten(weights)
    out = np.empty_like(vec)
    for i in range(vec.size):
        up, down = vec.copy(), vec.copy()
        up[i] += h
        down[i] -= h
        out[i] = (mse(arch, unflatten(up, arch), batch) - mse(arch, unflatten(down, arch), batch)) / (200 * h)
    return out


def relative_error(a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / scale


def gradient_check(seed):
    rng = np.random.default_rng(seed)
    arch = random_arch(rng)
    w = tuple(rng.normal(0.0, 0.7, size=s) for s in arch.shapes)
    x = rng.normal(size=(7, arch.input_dim))
    t = rng.normal(size=(7, arch.output_dim))
    return relative_error(flatten(gradient(arch, w, (x, t))), finite_difference(arch, w, (x, t)))


def linear_problem(seed, n=60, d=4, c=2, noise=0.1):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5, 0.5, size=(n, d))
    w_true = rng.normal(size=(d + 1, c))
    t = x @ w_true[:-1] + w_true[-1] + noise * rng.normal(size=(n, c))
    return x, t


def least_squares_mse(x, t):
    xa = np.hstack([x, np.ones((len(x), 1))])
    w, *_ = np.linalg.lstsq(xa, t, rcond=None)
    return 100.0 * np.mean((xa @ w - t) ** 2), w


XOR_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], float)
XOR_T = np.array([[0], [1], [1], [0]], float)


def xor_successes(algorithm, seeds=range(10)):
    """Reference protocol: 4 tanh units, U[-1, 1] start, 50 epochs, no early stop."""
    part = (XOR_X, XOR_T)
    split = DataSplit(part, part, part)
    arch = Architecture(2, 1, ((4, Activation.FTH),))
    cfg = TrainConfig(algorithm, bp_rate=0.25, bp_momentum=0.25, max_epochs=50, patience=50)
    wins = 0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        w0 = tuple(rng.uniform(-1, 1, size=s) for s in arch.shapes)
        w, _ = train(arch, w0, split, cfg)
        wins += mse(arch, w, part) < 5.0
    return wins


# ----------------------------------------------------------------- structure

def test_architecture_bounds():
    with pytest.raises(NetworkError):
        Architecture(3, 2, ((13, "FL"),))
    with pytest.raises(NetworkError):
        Architecture(3, 2, ((2, "FL"),) * 4)
    with pytest.raises(NetworkError):
        Architecture(0, 2)
    arch = Architecture(3, 2, ((4, "FTH"), (2, "FLS")))
    assert arch.shapes == [(4, 4), (5, 2), (3, 2)]
    assert arch.activations[-1] is Activation.FL


def test_activation_ranges():
    x = np.linspace(-40, 40, 101)
    assert np.all((Activation.FLS(x) >= 0) & (Activation.FLS(x) <= 1))
    assert Activation.FLS(np.array([0.0]))[0] == 0.5
    assert np.all(np.abs(Activation.FTH(x)) <= 1)
    np.testing.assert_allclose(Activation.FLS(x), 1 / (1 + np.exp(-x)), rtol=1e-12, atol=1e-15)


def test_init_weights_range_and_determinism():
    arch = Architecture(9, 2, ((12, "FTH"), (12, "FLS"), (12, "FL")))
    w = init_weights(arch, np.random.default_rng(3))
    assert [m.shape for m in w] == arch.shapes
    assert all(np.all(np.abs(m) <= 0.05) for m in w)
    again = init_weights(arch, np.random.default_rng(3))
    assert all(np.array_equal(a, b) for a, b in zip(w, again))


def test_init_weights_mean():
    arch = Architecture(12, 12, ((12, "FL"), (12, "FL"), (12, "FL")))  # 4 * 13 * 12 = 624 per draw
    rng = np.random.default_rng(11)
    entries = np.concatenate([flatten(init_weights(arch, rng)) for _ in range(17)])[:10_000]
    assert entries.size == 10_000
    # sd of the mean is 0.1 / sqrt(12e4) ~ 2.9e-4, so 0.005 is far beyond 99%
    assert abs(entries.mean()) < 0.005


# ----------------------------------------------------------------- forward / mse

def test_forward_examples():
    arch = Architecture(3, 2, ((4, "FL"),))
    zeros = tuple(np.zeros(s) for s in arch.shapes)
    assert np.all(forward(arch, zeros, np.ones((5, 3))) == 0)

    rng = np.random.default_rng(0)
    # identity output layer exposes the hidden activations
    tanh_arch = Architecture(3, 4, ((4, "FTH"),))
    w1 = rng.normal(size=(4, 4))
    w1[-1] = 0.0
    w2 = np.vstack([np.eye(4), np.zeros((1, 4))])
    assert np.all(forward(tanh_arch, (w1, w2), np.zeros((2, 3))) == 0.0)

    fls = Architecture(1, 1, ((1, "FLS"),))
    w = (np.zeros((2, 1)), np.array([[1.0], [0.0]]))
    assert forward(fls, w, np.array([[3.0]]))[0, 0] == 0.5


def test_forward_shape_errors():
    arch = Architecture(3, 2, ((4, "FL"),))
    w = init_weights(arch, np.random.default_rng(0))
    with pytest.raises(NetworkError, match="input batch"):
        forward(arch, w, np.ones((2, 4)))
    with pytest.raises(NetworkError, match="shape"):
        forward(arch, (w[0], w[0]), np.ones((2, 3)))
    with pytest.raises(NetworkError, match="expected 2"):
        forward(arch, w[:1], np.ones((2, 3)))


def _identity_net():
    arch = Architecture(1, 1, ((1, "FL"),))
    return arch, (np.array([[1.0], [0.0]]), np.array([[1.0], [0.0]]))


def test_mse_examples():
    arch, w = _identity_net()
    x = np.array([[0.3], [0.7]])
    assert mse(arch, w, (x, x)) == 0.0
    assert mse(arch, w, (np.array([[0.5]]), np.array([[0.0]]))) == pytest.approx(25.0)
    assert mse(arch, w, (np.array([[0.0], [1.0]]), np.array([[1.0], [1.0]]))) == pytest.approx(50.0)
    with pytest.raises(NetworkError, match="empty"):
        mse(arch, w, (np.zeros((0, 1)), np.zeros((0, 1))))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_mse_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    arch = random_arch(rng)
    w = init_weights(arch, rng)
    x = rng.normal(size=(9, arch.input_dim))
    t = rng.normal(size=(9, arch.output_dim))
    perm = rng.permutation(9)
    assert mse(arch, w, (x, t)) == pytest.approx(mse(arch, w, (x[perm], t[perm])), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), layers=st.integers(1, 3))
def test_linear_network_is_composed_affine_map(seed, layers):
    rng = np.random.default_rng(seed)
    hidden = tuple((int(rng.integers(1, 13)), "FL") for _ in range(layers))
    arch = Architecture(4, 3, hidden)
    w = tuple(rng.normal(size=s) for s in arch.shapes)
    # compose the augmented maps [A b; 0 1] directly
    total = np.eye(5)
    for m in w:
        block = np.zeros((m.shape[0], m.shape[1] + 1))
        block[:, :-1] = m
        block[-1, -1] = 1.0
        total = total @ block
    x = rng.normal(size=(6, 4))
    direct = np.hstack([x, np.ones((6, 1))]) @ total
    np.testing.assert_allclose(forward(arch, w, x), direct[:, :-1], rtol=1e-10, atol=1e-10)


# ----------------------------------------------------------------- gradient

def test_gradient_linear_closed_form():
    x, t = linear_problem(0)
    arch = Architecture(4, 2)
    w = (np.random.default_rng(1).normal(size=(5, 2)),)
    xa = np.hstack([x, np.ones((len(x), 1))])
    closed = 2.0 / t.size * xa.T @ (xa @ w[0] - t)
    np.testing.assert_allclose(gradient(arch, w, (x, t))[0], closed, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("seed", range(12))
def test_gradient_matches_finite_differences(seed):
    assert gradient_check(seed) < 1e-6


def test_gradient_zero_at_exact_fit():
    rng = np.random.default_rng(2)
    arch = Architecture(3, 2, ((5, "FTH"),))
    w = tuple(rng.normal(size=s) for s in arch.shapes)
    x = rng.normal(size=(8, 3))
    t = forward(arch, w, x)
    assert all(np.all(g == 0) for g in gradient(arch, w, (x, t)))


def test_flatten_roundtrip():
    arch = Architecture(3, 2, ((4, "FTH"), (2, "FLS")))
    w = init_weights(arch, np.random.default_rng(0))
    back = unflatten(flatten(w), arch)
    assert all(np.array_equal(a, b) for a, b in zip(w, back))
    assert flatten(w).size == arch.n_weights


# ----------------------------------------------------------------- trainers

def _linear_split(seed, **kw):
    x, t = linear_problem(seed, **kw)
    return DataSplit((x, t), (x, t), (x, t))


def test_bp_zero_step_keeps_weights():
    split = _linear_split(0)
    arch = Architecture(4, 2, ((3, "FTH"),))
    w0 = init_weights(arch, np.random.default_rng(0))
    cfg = TrainConfig("BP", bp_rate=0.0, bp_momentum=0.0, max_epochs=20, patience=50)
    w, hist = train_bp(arch, w0, split, cfg)
    assert all(np.array_equal(a, b) for a, b in zip(w, w0))
    assert hist.epochs == 20


@pytest.mark.parametrize("seed", range(5))
def test_bp_convex_non_increasing(seed):
    split = _linear_split(seed)
    arch = Architecture(4, 2)
    w0 = init_weights(arch, np.random.default_rng(seed))
    cfg = TrainConfig("BP", bp_rate=0.05, bp_momentum=0.0, max_epochs=50, patience=50)
    _, hist = train_bp(arch, w0, split, cfg)
    assert hist.epochs == 50
    assert np.all(np.diff(hist.train_mse) <= 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_scg_reaches_least_squares(seed):
    split = _linear_split(seed)
    x, t = split.train
    target, _ = least_squares_mse(x, t)
    arch = Architecture(4, 2)
    w0 = init_weights(arch, np.random.default_rng(seed))
    w, hist = train_scg(arch, w0, split, TrainConfig("SCG", max_epochs=50, patience=50))
    assert hist.epochs <= 50
    assert abs(mse(arch, w, split.train) - target) / target < 1e-3


def test_scg_stationary_start():
    rng = np.random.default_rng(4)
    arch = Architecture(3, 2)
    w0 = (rng.normal(size=(4, 2)),)
    x = rng.normal(size=(10, 3))
    t = forward(arch, w0, x)
    split = DataSplit((x, t), (x, t), (x, t))
    w, hist = train_scg(arch, w0, split, TrainConfig("SCG"))
    assert hist.stopped == "zero_gradient"
    assert np.array_equal(w[0], w0[0])


@pytest.mark.parametrize("algorithm", ["BP", "SCG"])
@pytest.mark.parametrize("seed", range(4))
def test_best_validation_weights_returned(algorithm, seed, small_split):
    rng = np.random.default_rng(seed)
    arch = Architecture(4, 2, ((6, "FTH"),))
    w0 = init_weights(arch, rng)
    w, hist = train(arch, w0, small_split, TrainConfig(algorithm, bp_rate=0.25, bp_momentum=0.25))
    assert len(hist.val_mse) == hist.epochs + 1
    assert mse(arch, w, small_split.validation) == pytest.approx(min(hist.val_mse), rel=1e-12)
    assert hist.val_mse[hist.best_epoch] == min(hist.val_mse)
    if hist.stopped == "patience":
        assert hist.epochs - hist.best_epoch == 5


def test_zero_epochs_returns_start(small_split):
    arch = Architecture(4, 2, ((3, "FLS"),))
    w0 = init_weights(arch, np.random.default_rng(0))
    w, hist = train(arch, w0, small_split, TrainConfig("SCG", max_epochs=0))
    assert hist.epochs == 0 and all(np.array_equal(a, b) for a, b in zip(w, w0))


def test_divergence_raises():
    split = _linear_split(0, noise=5.0)
    arch = Architecture(4, 2, ((4, "FL"),))
    w0 = init_weights(arch, np.random.default_rng(0))
    with pytest.raises(TrainingDiverged):
        train_bp(arch, w0, split, TrainConfig("BP", bp_rate=1e6, bp_momentum=0.9, patience=50))


def test_trainer_validation():
    with pytest.raises(NetworkError):
        TrainConfig("RPROP")
    with pytest.raises(NetworkError):
        TrainConfig("BP", max_epochs=51)


def test_xor_reference_thresholds():
    assert xor_successes("BP") >= 1
    assert xor_successes("SCG") >= 5
