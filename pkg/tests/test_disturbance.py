import math

import numpy as np
import pytest
from sklearn.base import clone

from conftest import bernoulli_mixture, random_params, zero_params
from oracles import central_diff, pair_kl, spi_objective
from microdl.disturbance import (
    LOG_COLUMNS, DisturbancePairs, MicroRBM, TrainingConfig, build_dfd, micro_update,
    select_representatives, spi_grad_b, spi_grad_c, spi_grad_w, spi_gradients, spi_kl_parts,
    spi_kl_term, train_micro, train_micro_dgrbm, train_micro_drbm,
)
from microdl.exceptions import ConfigError, DataError, NumericError
from microdl.numerics import rng_stream
from microdl.rbm import GAUSSIAN, Cd1Stats, cd1_update


def test_pairs_invariants():
    with pytest.raises(DataError):
        DisturbancePairs([(0, 1)], [], {0: "a", 1: "b"})
    with pytest.raises(DataError):
        DisturbancePairs([(0, 1), (2, 3)], [(0, 1)], {0: "a", 1: "a", 2: "b", 3: "b"})
    p = DisturbancePairs([(0, 1), (2, 3)], [(0, 2)], {0: "a", 1: "a", 2: "b", 3: "b"})
    assert (p.k_s, p.k_d) == (2, 1)
    with pytest.raises(DataError):
        p.check_indices(3)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainingConfig(alpha=1.0)
    with pytest.raises(ConfigError):
        TrainingConfig(eps=0)
    with pytest.raises(ConfigError):
        TrainingConfig(gradient_mode="other")
    assert TrainingConfig().replace(alpha=0.5).alpha == 0.5


def test_select_three_classes():
    labels = np.repeat([0, 1, 2], 5)
    pairs = select_representatives(labels, rng_stream(0))
    assert (pairs.k_s, pairs.k_d) == (3, 3)
    for f, g in pairs.sfd:
        assert f != g and labels[f] == labels[g]
    again = select_representatives(labels, rng_stream(0))
    assert pairs.sfd == again.sfd and pairs.dfd == again.dfd


def test_select_single_class_then_training_fails():
    with pytest.warns(UserWarning):
        pairs = select_representatives([0, 0, 0], rng_stream(0))
    assert pairs.k_s == 1 and pairs.dfd == []
    with pytest.raises(ConfigError):
        train_micro(np.zeros((3, 2)), None, TrainingConfig(epochs=1), pairs=pairs)


def test_select_small_class_named():
    with pytest.raises(DataError, match="'b'"):
        select_representatives(["a", "a", "b"], rng_stream(0))


def test_select_uniform_over_members():
    counts = np.zeros(4)
    for s in range(2000):
        f, g = select_representatives([0, 0, 0, 0, 1, 1], rng_stream(s)).sfd[0]
        counts[f] += 1
        counts[g] += 1
    assert np.allclose(counts / counts.sum(), 0.25, atol=0.02)


def _pairs_for(k):
    sfd = [(2 * i, 2 * i + 1) for i in range(k)]
    return build_dfd(DisturbancePairs(sfd, [], {j: j // 2 for j in range(2 * k)}))


def test_build_dfd_counts_and_order():
    assert _pairs_for(2).k_d == 1
    assert _pairs_for(4).k_d == math.comb(4, 2)
    assert _pairs_for(3).dfd == [(0, 2), (0, 4), (2, 4)]
    with pytest.warns(UserWarning):
        assert build_dfd(DisturbancePairs([(0, 1)], [], {0: 0, 1: 0})).dfd == []


def test_spi_kl_examples(rng):
    data = np.tile(rng.random(4), (4, 1))
    p = random_params(rng, 4, 3)
    assert spi_kl_parts(p, data, _pairs_for(2))[0] == 0.0
    assert spi_kl_term(zero_params(1, 1), np.array([[1.0], [0.0], [1.0], [0.0]]), _pairs_for(2)) == 0.0


def test_spi_kl_matches_oracle(rng):
    for _ in range(10):
        p = random_params(rng, 4, 3)
        data = rng.random((4, 4))
        pairs = _pairs_for(2)
        expected = spi_objective(p.W, p.b, data, pairs.sfd, pairs.dfd)
        assert spi_kl_term(p, data, pairs) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_gradient_stationary_for_identical_pair(rng):
    p = random_params(rng, 4, 3)
    v = rng.random(4)
    assert np.allclose(spi_grad_w(p, v, v), 0, atol=1e-15)
    assert np.allclose(spi_grad_b(p, v, v), 0, atol=1e-15)


def test_mode_worked_example():
    p = zero_params(1, 1)
    assert spi_grad_w(p, [1.0], [0.0], "derived")[0, 0] == pytest.approx(0.25, abs=1e-12)
    assert spi_grad_w(p, [1.0], [0.0], "paper-literal")[0, 0] == pytest.approx(-0.09657, abs=1e-5)
    assert spi_grad_w(p, [1.0], [0.0], "paper-literal")[0, 0] == pytest.approx(
        0.25 * (2 * math.log(0.5) + 1), abs=1e-7)
    assert spi_grad_b(p, [1.0], [0.0], "derived")[0] == pytest.approx(0.0, abs=1e-12)
    assert spi_grad_b(p, [1.0], [0.0], "paper-literal")[0] == pytest.approx(
        0.25 * (2 * math.log(0.5) + 1) - 0.25, abs=1e-7)
    # Finite difference of the single-pair KL in w agrees with the derived value.
    fd = (pair_kl(np.array([[1e-6]]), 0.0, [1.0], [0.0])
          - pair_kl(np.array([[-1e-6]]), 0.0, [1.0], [0.0])) / 2e-6
    assert fd == pytest.approx(0.25, abs=1e-8)


def _fd_check(rng, n, m, tol):
    p = random_params(rng, n, m)
    vf, vg = rng.random(n), rng.random(n)
    W, b = p.W.copy(), p.b.copy()
    fd_w = central_diff(lambda: pair_kl(W, b, vf, vg), W)
    fd_b = central_diff(lambda: pair_kl(W, b, vf, vg), b)
    gw, gb = spi_grad_w(p, vf, vg), spi_grad_b(p, vf, vg)
    assert np.linalg.norm(gw - fd_w) <= tol * max(np.linalg.norm(fd_w), 1e-12)
    assert np.linalg.norm(gb - fd_b) <= tol * max(np.linalg.norm(fd_b), 1e-12)


def test_gradient_finite_difference_3x2(rng):
    for _ in range(5):
        _fd_check(rng, 3, 2, 1e-5)


def test_gradient_finite_difference_random_sizes(rng):
    for _ in range(20):
        _fd_check(rng, int(rng.integers(1, 7)), int(rng.integers(1, 7)), 1e-4)


def test_set_gradient_matches_objective(rng):
    p = random_params(rng, 3, 2)
    data = rng.random((6, 3))
    pairs = _pairs_for(3)
    W, b = p.W.copy(), p.b.copy()
    fd = central_diff(lambda: spi_objective(W, b, data, pairs.sfd, pairs.dfd), W)
    gw, _ = spi_gradients(p, data, pairs)
    assert np.linalg.norm(gw - fd) < 1e-5 * np.linalg.norm(fd)


def test_grad_c_is_zero(rng):
    g = spi_grad_c(random_params(rng, 5, 2))
    assert g.shape == (5,) and not g.any()


def _random_stats(rng, n, m):
    return Cd1Stats(rng.normal(size=(n, m)), rng.normal(size=(n, m)), rng.normal(size=m),
                    rng.normal(size=m), rng.normal(size=n), rng.normal(size=n))


def test_ablation_identity(rng):
    for _ in range(20):
        n, m = rng.integers(1, 7, size=2)
        p = random_params(rng, n, m)
        stats = _random_stats(rng, n, m)
        eps = float(rng.uniform(1e-4, 0.5))
        cfg = TrainingConfig(alpha=0.0, eps=eps)
        got = micro_update(p, stats, rng.random((4, n)), _pairs_for(2), cfg)
        ref = cd1_update(p, stats, eps)
        assert np.array_equal(got.W, ref.W) and np.array_equal(got.b, ref.b)
        assert np.array_equal(got.c, ref.c)


def test_identity_update_with_no_signal(rng):
    p = random_params(rng, 3, 2)
    z = Cd1Stats(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros(2), np.zeros(2), np.zeros(3), np.zeros(3))
    data = np.tile(rng.random(3), (4, 1))
    q = micro_update(p, z, data, _pairs_for(2), TrainingConfig(alpha=0.3))
    assert np.allclose(q.W, p.W, atol=1e-15) and np.allclose(q.b, p.b, atol=1e-15)


def test_scaling_conventions(rng):
    p = random_params(rng, 3, 2)
    stats = _random_stats(rng, 3, 2)
    data = rng.random((4, 3))
    pairs = _pairs_for(2)
    a, eps = 0.3, 0.05
    cd = cd1_update(p, stats, (1 - a) * eps)
    gw, gb = spi_gradients(p, data, pairs, "derived")
    obj = micro_update(p, stats, data, pairs, TrainingConfig(alpha=a, eps=eps))
    assert np.allclose(obj.W, cd.W - a * eps * gw, atol=1e-14)
    assert np.allclose(obj.b, cd.b - a * eps * gb, atol=1e-14)
    lit = micro_update(p, stats, data, pairs, TrainingConfig(
        alpha=a, eps=eps, gradient_mode="paper-literal", spi_scaling="paper-literal"))
    gw_l, gb_l = spi_gradients(p, data, pairs, "paper-literal")
    assert np.allclose(lit.W, cd.W + a * gw_l, atol=1e-14)
    assert np.allclose(lit.b, cd.b + a * gb_l, atol=1e-14)
    # The visible bias never sees the disturbance.
    assert np.allclose(obj.c, cd.c, atol=1e-15) and np.allclose(lit.c, cd.c, atol=1e-15)


def test_update_names_nonfinite_parameter(rng):
    p = random_params(rng, 2, 2)
    p.b[0] = np.inf
    z = Cd1Stats(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2))
    with pytest.raises(NumericError, match=r"\bb\b"):
        micro_update(p, z, np.zeros((4, 2)), _pairs_for(2), TrainingConfig(alpha=0.0))


def test_objective_descent_on_frozen_problem(rng):
    p = random_params(rng, 4, 3, scale=0.5)
    data = rng.random((6, 4))
    pairs = _pairs_for(3)
    z = Cd1Stats(np.zeros((4, 3)), np.zeros((4, 3)), np.zeros(3), np.zeros(3), np.zeros(4), np.zeros(4))
    cfg = TrainingConfig(alpha=0.5, eps=0.05)
    trace = []
    for _ in range(100):
        trace.append(spi_kl_term(p, data, pairs))
        p = micro_update(p, z, data, pairs, cfg)
    assert np.polyfit(np.arange(100), trace, 1)[0] < 0
    assert trace[-1] < trace[0]


def _two_clusters(seed):
    data, y = bernoulli_mixture(np.random.default_rng(seed), 80, 12, n_modes=2, flip=0.05)
    return data, y


def test_epochs_zero_returns_initialization():
    data, y = _two_clusters(0)
    res = train_micro(data, y, TrainingConfig(epochs=0, seed=3))
    ref = train_micro(data, y, TrainingConfig(epochs=0, seed=3, alpha=0.6))
    assert np.array_equal(res.params.W, ref.params.W)
    assert len(res.log) == 1 and res.log[0]["epoch"] == 0


def test_log_columns():
    data, y = _two_clusters(1)
    res = train_micro(data, y, TrainingConfig(epochs=2))
    assert [tuple(r) for r in res.log] == [LOG_COLUMNS] * 3


def test_micro_shrinks_within_class_kl():
    data, y = _two_clusters(2)
    cfg = TrainingConfig(alpha=0.3, eps=0.1, epochs=30, batch_size=16, seed=4)
    micro = train_micro_drbm(data, y, cfg)
    plain = train_micro(data, y, cfg, micro=False)
    assert micro.log[-1]["spi_sfd_kl"] < micro.log[0]["spi_sfd_kl"]
    assert micro.log[-1]["spi_sfd_kl"] < plain.log[-1]["spi_sfd_kl"]


def test_training_deterministic():
    data, y = _two_clusters(3)
    cfg = TrainingConfig(epochs=3, seed=7)
    a, b = train_micro_dgrbm(data - 0.5, y, cfg), train_micro_dgrbm(data - 0.5, y, cfg)
    assert np.array_equal(a.params.W, b.params.W)
    assert a.params.visible_kind == GAUSSIAN


def test_binary_training_needs_unit_interval():
    with pytest.raises(DataError):
        train_micro_drbm(np.full((4, 2), 2.0), [0, 0, 1, 1], TrainingConfig(epochs=1))


class CountingLabels:
    """Label source that records every index read."""

    def __init__(self, labels):
        self._labels = list(labels)
        self.reads = set()

    def __len__(self):
        return len(self._labels)

    def __getitem__(self, i):
        self.reads.add(int(i))
        return self._labels[i]


def test_label_frugality():
    data, y = _two_clusters(5)
    # Only two samples per class carry a label; -1 marks unlabeled samples.
    partial = np.full(len(y), -1)
    for cls in (0, 1):
        partial[np.flatnonzero(y == cls)[:2]] = cls
    source = CountingLabels(partial)
    pairs = select_representatives(source, rng_stream(0))
    labeled_reads = {i for i in source.reads if partial[i] >= 0}
    assert labeled_reads == set(np.flatnonzero(partial >= 0))
    assert len(labeled_reads) == 2 * 2
    # The training loop itself consumes only the pairs, never a label.
    source.reads.clear()
    res = train_micro(data, None, TrainingConfig(epochs=2), pairs=pairs)
    assert source.reads == set()
    assert set(res.pairs.class_of) == labeled_reads


def test_micro_rbm_estimator():
    data, y = _two_clusters(6)
    est = MicroRBM(n_components=4, visible="binary", n_epochs=2, random_state=2)
    H = est.fit(data, y).transform(data)
    assert H.shape == (80, 4)
    assert np.array_equal(H, clone(est).fit(data, y).transform(data))
    assert len(est.training_log_) == 3 and est.pairs_.k_s == 2
    with pytest.raises(ConfigError):
        MicroRBM(alpha=0.0).fit(data, y)
