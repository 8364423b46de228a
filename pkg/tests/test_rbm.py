import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import bernoulli_mixture, random_params, zero_params
from microdl.exceptions import DataError, DimensionError, KindError, NumericError, ParameterError
from microdl.numerics import rng_stream
from microdl.rbm import (
    BINARY, GAUSSIAN, RBM, Cd1Stats, RbmParams, cd1_step, cd1_update, dumps_params,
    hidden_given_visible, init_params, load_params, loads_params, save_params, train_rbm,
    visible_given_hidden_binary, visible_given_hidden_gaussian,
)


def test_params_dimension_checks():
    with pytest.raises(DimensionError):
        RbmParams(np.zeros((3, 2)), np.zeros(3), np.zeros(3))
    with pytest.raises(KindError):
        RbmParams(np.zeros((1, 1)), np.zeros(1), np.zeros(1), "ternary")


def test_init_params_scale_and_biases():
    p = init_params(200, 100, BINARY, rng_stream(0))
    assert abs(p.W.std() - 0.01) < 0.001
    assert not p.b.any() and not p.c.any()


def test_hidden_given_visible_examples():
    assert np.all(hidden_given_visible(zero_params(3, 2), np.ones((4, 3))) == 0.5)
    p = zero_params(3, 2)
    p.b[1] = math.log(3)
    out = hidden_given_visible(p, np.random.default_rng(0).random((5, 3)))
    assert np.allclose(out[:, 1], 0.75, atol=1e-15)
    one = RbmParams([[2.0]], [-1.0], [0.0])
    assert hidden_given_visible(one, [[1.0]])[0, 0] == pytest.approx(0.73106, abs=1e-5)
    with pytest.raises(DimensionError):
        hidden_given_visible(p, np.ones((2, 4)))


def test_hidden_formula_same_for_both_kinds(rng):
    p = random_params(rng, 4, 3)
    g = RbmParams(p.W, p.b, p.c, GAUSSIAN)
    v = rng.standard_normal((6, 4))
    assert np.array_equal(hidden_given_visible(p, v), hidden_given_visible(g, v))


def test_visible_binary_examples(rng):
    assert np.all(visible_given_hidden_binary(zero_params(3, 2), np.ones((2, 2))) == 0.5)
    p = random_params(rng, 3, 2)
    assert np.allclose(visible_given_hidden_binary(p, np.zeros((1, 2)))[0], 1 / (1 + np.exp(-p.c)))
    one = RbmParams([[-1.0]], [0.0], [0.0])
    assert visible_given_hidden_binary(one, [[1.0]])[0, 0] == pytest.approx(0.26894, abs=1e-5)
    with pytest.raises(KindError):
        visible_given_hidden_binary(zero_params(2, 2, GAUSSIAN), np.ones((1, 2)))


def test_visible_gaussian_examples(rng):
    p = random_params(rng, 3, 2, GAUSSIAN)
    assert np.allclose(visible_given_hidden_gaussian(p, np.zeros((1, 2)))[0], p.c)
    ident = RbmParams(np.eye(3), np.zeros(3), np.zeros(3), GAUSSIAN)
    for j in range(3):
        e = np.eye(3)[j:j + 1]
        assert np.array_equal(visible_given_hidden_gaussian(ident, e), e)
    h = np.tile([[1.0, 0.0]], (100_000, 1))
    draws = visible_given_hidden_gaussian(p, h, rng_stream(1), sample=True)
    assert np.allclose(draws.mean(axis=0), h[0] @ p.W.T + p.c, atol=0.02)
    with pytest.raises(KindError):
        visible_given_hidden_gaussian(zero_params(2, 2), np.ones((1, 2)))


def test_gaussian_mean_is_affine(rng):
    p = random_params(rng, 4, 3, GAUSSIAN)
    h1, h2 = rng.random((1, 3)), rng.random((1, 3))
    lhs = visible_given_hidden_gaussian(p, h1 + h2)
    rhs = visible_given_hidden_gaussian(p, h1) + visible_given_hidden_gaussian(p, h2) - p.c
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_binary_conditionals_open_interval(rng):
    p = random_params(rng, 5, 4, scale=3.0)
    v = (rng.random((20, 5)) < 0.5).astype(float)
    h = hidden_given_visible(p, v)
    r = visible_given_hidden_binary(p, h)
    assert np.all((h > 0) & (h < 1)) and np.all((r > 0) & (r < 1))


def test_cd1_fixed_point():
    # W = 0: the reconstruction is c whatever h is sampled; with v0 = c the chain is stationary.
    p = RbmParams(np.zeros((3, 2)), [0.3, -0.2], [0.5, -1.0, 2.0], GAUSSIAN)
    stats = cd1_step(p, np.tile(p.c, (4, 1)), rng_stream(0))
    assert np.allclose(stats.vh_data, stats.vh_recon)
    assert np.allclose(stats.h_data, stats.h_recon)
    assert cd1_update(p, stats, 0.1).W.tolist() == p.W.tolist()


def test_cd1_hand_example():
    stats = cd1_step(zero_params(1, 1), [[1.0]], rng_stream(0))
    assert stats.vh_data[0, 0] == 0.5
    assert stats.h_data[0] == 0.5
    assert stats.v_recon[0] == 0.5  # sigma(0) whatever the sampled h


def test_cd1_deterministic(rng):
    p = random_params(rng, 4, 3)
    v = (rng.random((8, 4)) < 0.5).astype(float)
    a, b = cd1_step(p, v, rng_stream(9)), cd1_step(p, v, rng_stream(9))
    for f in ("vh_data", "vh_recon", "h_data", "h_recon", "v_data", "v_recon"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_cd1_empty_batch():
    with pytest.raises(DataError):
        cd1_step(zero_params(2, 2), np.zeros((0, 2)), rng_stream(0))


def _stats(dvh, n=1, m=1):
    z = np.zeros
    return Cd1Stats(np.full((n, m), dvh), z((n, m)), z(m), z(m), z(n), z(n))


def test_cd1_update_examples(rng):
    p = random_params(rng, 1, 1)
    assert cd1_update(p, _stats(0.0), 0.1).W.tolist() == p.W.tolist()
    assert (cd1_update(p, _stats(0.5), 0.1).W - p.W)[0, 0] == pytest.approx(0.05, abs=1e-15)
    with pytest.raises(NumericError):
        cd1_update(p, _stats(np.nan), 0.1)
    with pytest.raises(ParameterError):
        cd1_update(p, _stats(0.1), 0.0)


def _slope(errors):
    x = np.arange(len(errors), dtype=float)
    return np.polyfit(x, np.asarray(errors), 1)[0]


def test_training_reduces_reconstruction_error_small_model():
    data, _ = bernoulli_mixture(np.random.default_rng(0), 200, 4)
    p0 = init_params(4, 2, BINARY, rng_stream(0, 0))
    _, errors = train_rbm(data, p0, 0.1, 200, 20, rng_stream(0, 1))
    assert len(errors) == 201
    assert _slope(errors) < 0


def test_training_deterministic(rng):
    data, _ = bernoulli_mixture(rng, 50, 6)
    p0 = init_params(6, 3, BINARY, rng_stream(1))
    a, ea = train_rbm(data, p0, 0.1, 5, 10, rng_stream(2))
    b, eb = train_rbm(data, p0, 0.1, 5, 10, rng_stream(2))
    assert np.array_equal(a.W, b.W) and ea == eb


def test_checkpoint_roundtrip(tmp_path, rng):
    p = random_params(rng, 3, 2, GAUSSIAN)
    q = loads_params(dumps_params(p))
    assert np.array_equal(p.W, q.W) and np.array_equal(p.b, q.b) and np.array_equal(p.c, q.c)
    assert q.visible_kind == GAUSSIAN and q.gaussian_sigma == 1.0
    path = tmp_path / "m.txt"
    save_params(p, path)
    assert dumps_params(load_params(path)) == dumps_params(p)


def test_checkpoint_layout(rng):
    text = dumps_params(zero_params(2, 1))
    assert text.splitlines()[:6] == ["MICRODL-RBM 1", "visible_kind binary", "n_visible 2",
                                     "n_hidden 1", "gaussian_sigma 1.0", "W"]


@pytest.mark.parametrize("text", ["", "NOPE 1\n", "MICRODL-RBM 1\nvisible_kind binary\n"])
def test_checkpoint_malformed(text):
    with pytest.raises(DataError):
        loads_params(text)


def test_rbm_estimator(rng):
    X, _ = bernoulli_mixture(rng, 60, 5)
    est = RBM(n_components=3, n_epochs=3, random_state=1)
    H = est.fit(X).transform(X)
    assert H.shape == (60, 3) and np.all((H > 0) & (H < 1))
    again = clone(est).fit(X).transform(X)
    assert np.array_equal(H, again)
    assert est.get_params()["n_components"] == 3
    with pytest.raises(NotFittedError):
        RBM().transform(X)
    with pytest.raises(ValueError):
        RBM().fit(np.array([[np.nan, 1.0]]))
