import math

import numpy as np
import pytest

from clpdd.objective import (
    class_anchor_grad_w,
    class_anchor_loss,
    make_outer_batch,
    mse_outer_grad_w,
    mse_outer_loss,
    onehot,
)

from oracles import central_diff_grad, max_rel_err


def _batch(rng, m, d, c, scale=0.5):
    x = scale * rng.standard_normal((m, d))
    labels = np.concatenate([np.arange(c), rng.integers(0, c, size=m - c)])
    return make_outer_batch(x, labels, c)


def test_zero_probe_gives_log_c():
    rng = np.random.default_rng(0)
    for c in (2, 3, 7):
        batch = _batch(rng, 2 * c, 5, c)
        loss = class_anchor_loss(batch, np.zeros((5, c)), 0.07)
        assert loss == pytest.approx(math.log(c), rel=0, abs=1e-12)


def test_hand_computed_binary_case():
    batch = make_outer_batch(np.array([[1.0, 0.0]]), np.array([0]), 2)
    w = np.array([[1.0, 0.0], [0.0, 0.0]])  # anchor 0 = e1, anchor 1 = 0
    loss = class_anchor_loss(batch, w, 1.0)
    assert loss == pytest.approx(math.log(1.0 + math.exp(-1.0)), abs=1e-12)


def test_sharp_temperature_saturates():
    # correct-class logit margin 1 at tau=0.01 drives the loss below 1e-40
    batch = make_outer_batch(np.array([[1.0]]), np.array([0]), 2)
    w = np.array([[1.0, 0.0]])
    assert class_anchor_loss(batch, w, 0.01) <= 1e-40


def test_tau_must_be_positive():
    batch = make_outer_batch(np.zeros((1, 2)), np.array([0]), 2)
    with pytest.raises(ValueError):
        class_anchor_loss(batch, np.zeros((2, 2)), 0.0)
    with pytest.raises(ValueError):
        class_anchor_grad_w(batch, np.zeros((2, 2)), -1.0)


def test_grad_vanishes_when_saturated():
    # one-hot features with aligned anchors give every row a logit margin of
    # exactly 100*tau, deep in the saturated regime
    tau = 0.07
    labels = np.arange(6) % 3
    x = np.eye(3)[labels]
    batch = make_outer_batch(x, labels, 3)
    w = 100.0 * tau * np.eye(3)
    g = class_anchor_grad_w(batch, w, tau)
    assert np.linalg.norm(g) <= 1e-18 * np.linalg.norm(x)


def test_grad_rows_sum_to_zero():
    rng = np.random.default_rng(2)
    batch = _batch(rng, 8, 5, 3)
    g = class_anchor_grad_w(batch, 0.3 * rng.standard_normal((5, 3)), 0.07)
    assert np.allclose(g @ np.ones(3), np.zeros(5), atol=1e-15)


def test_grad_finite_differences():
    rng = np.random.default_rng(3)
    batch = _batch(rng, 6, 8, 3)
    w = 0.3 * rng.standard_normal((8, 3))
    analytic = class_anchor_grad_w(batch, w, 0.07)
    fd = central_diff_grad(lambda wp: class_anchor_loss(batch, wp, 0.07), w)
    assert max_rel_err(analytic, fd) <= 1e-6


def test_grad_finite_differences_many_instances():
    rng = np.random.default_rng(4)
    for _ in range(50):
        m = int(rng.integers(3, 9))
        d = int(rng.integers(2, 9))
        c = int(rng.integers(2, min(m, 4) + 1))
        tau = float(rng.choice([0.07, 0.2, 1.0]))
        batch = _batch(rng, m, d, c)
        w = 0.3 * rng.standard_normal((d, c))
        analytic = class_anchor_grad_w(batch, w, tau)
        fd = central_diff_grad(lambda wp: class_anchor_loss(batch, wp, tau), w)
        assert max_rel_err(analytic, fd) <= 1e-6


def test_shift_invariance():
    # adding the same constant to every logit row leaves the loss unchanged;
    # a rank-one probe perturbation v*1^T produces exactly such a shift when
    # scores are taken against features with x.v constant... instead test at
    # the logit level through two probes whose score rows differ by constants
    rng = np.random.default_rng(5)
    batch = _batch(rng, 4, 3, 3)
    w = rng.standard_normal((3, 3))
    base = class_anchor_loss(batch, w, 0.07)
    # perturb w by u 1_C^T: logits shift per-row by (x_i . u), constant over classes
    u = rng.standard_normal(3)
    w_shift = w + np.outer(u, np.ones(3))
    shifted = class_anchor_loss(batch, w_shift, 0.07)
    assert shifted == pytest.approx(base, rel=1e-12)


def test_loss_nonnegative_and_log_c_iff_constant_rows():
    rng = np.random.default_rng(6)
    for _ in range(20):
        batch = _batch(rng, 5, 4, 3)
        w = rng.standard_normal((4, 3))
        loss = class_anchor_loss(batch, w, 0.5)
        assert loss >= 0.0
    # constant logit rows: w columns all equal
    col = rng.standard_normal(4)
    w_const = np.stack([col, col, col], axis=1)
    batch = _batch(rng, 5, 4, 3)
    assert class_anchor_loss(batch, w_const, 0.5) == pytest.approx(math.log(3), abs=1e-12)


def test_mse_perfect_fit():
    rng = np.random.default_rng(7)
    x = np.eye(3)
    batch = make_outer_batch(x, np.array([0, 1, 2]), 3)
    w = np.eye(3)  # X W == T exactly
    assert mse_outer_loss(batch, w) == 0.0
    assert np.array_equal(mse_outer_grad_w(batch, w), np.zeros((3, 3)))


def test_mse_zero_predictor():
    rng = np.random.default_rng(8)
    batch = _batch(rng, 6, 4, 3)
    assert mse_outer_loss(batch, np.zeros((4, 3))) == pytest.approx(0.5, abs=1e-15)


def test_mse_grad_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m = int(rng.integers(3, 9))
        d = int(rng.integers(2, 9))
        c = int(rng.integers(2, min(m, 4) + 1))
        batch = _batch(rng, m, d, c)
        w = 0.5 * rng.standard_normal((d, c))
        analytic = mse_outer_grad_w(batch, w)
        fd = central_diff_grad(lambda wp: mse_outer_loss(batch, wp), w)
        assert max_rel_err(analytic, fd) <= 1e-6


def test_onehot_rejects_out_of_range():
    with pytest.raises(ValueError):
        onehot(np.array([0, 3]), 3)
