import numpy as np
import pytest

from clpdd.data import Dataset, gen_blobs
from clpdd.evaluation import (
    closed_form_probe,
    pca_project_2d,
    select_centroid,
    select_neighbor,
    select_random,
    train_linear_probe,
)


def test_probe_zero_epochs_is_chance_level():
    rng = np.random.default_rng(0)
    c, n = 4, 1000
    train_x = rng.standard_normal((40, 6))
    train_y = np.arange(40) % c
    eval_x = rng.standard_normal((n, 6))
    eval_y = np.arange(n) % c  # balanced labels, independent of features
    res = train_linear_probe(train_x, train_y, eval_x, eval_y, epochs=0, seed=1)
    p = 1.0 / c
    assert abs(res.eval_acc - p) <= 3.0 * np.sqrt(p * (1 - p) / n)
    assert res.epochs_run == 0


def test_probe_separable_blobs_perfect_train():
    for seed in range(5):
        train, ev = gen_blobs(3, 6, 30, center_scale=10.0, cluster_std=1.0, seed=seed)
        res = train_linear_probe(
            train.inputs, train.labels, ev.inputs, ev.labels, epochs=200, seed=seed
        )
        assert res.train_acc == 1.0


def test_probe_deterministic():
    train, ev = gen_blobs(3, 5, 20, 1.0, 1.0, seed=0)
    a = train_linear_probe(train.inputs, train.labels, ev.inputs, ev.labels, epochs=30, seed=5)
    b = train_linear_probe(train.inputs, train.labels, ev.inputs, ev.labels, epochs=30, seed=5)
    assert np.array_equal(a.w, b.w)


def test_closed_form_probe_trivially_separable():
    labels = np.array([0, 1, 2, 0, 1, 2])
    x = np.eye(3)[labels]  # features are the one-hot embedded labels
    y = np.eye(3)[labels]
    res = closed_form_probe(x, y, 0.01, x, labels)
    assert res.eval_acc == 1.0


def test_closed_form_probe_zero_features_tie_break():
    labels = np.array([1, 0, 2, 1, 1])
    x = np.zeros((5, 4))
    y = np.eye(3)[labels]
    res = closed_form_probe(x, y, 0.1, x, labels)
    # all scores zero: argmax picks class 0 everywhere
    assert res.eval_acc == pytest.approx(np.mean(labels == 0))


@pytest.mark.parametrize("center_scale,cluster_std", [(2.0, 0.5), (10.0, 1.0)])
def test_evaluator_agreement_on_blobs(center_scale, cluster_std):
    # closed form and 500-epoch trained probe agree within 2 accuracy points
    for seed in range(5):
        train, ev = gen_blobs(3, 8, 200, center_scale, cluster_std, seed=seed)
        cf = closed_form_probe(train.inputs, train.onehot_labels(), 0.1, ev.inputs, ev.labels)
        tp = train_linear_probe(
            train.inputs, train.labels, ev.inputs, ev.labels, epochs=500, seed=seed
        )
        assert abs(cf.eval_acc - tp.eval_acc) <= 0.02


def _dataset():
    train, _ = gen_blobs(4, 5, 25, 1.0, 1.0, seed=3)
    return train


def test_select_random_counts_and_membership():
    ds = _dataset()
    sel = select_random(ds, 2, seed=0)
    assert sel.inputs.shape == (8, 5)
    for i, lbl in enumerate(sel.labels):
        cls_rows = ds.inputs[ds.labels == lbl]
        assert any(np.array_equal(sel.inputs[i], r) for r in cls_rows)


def test_select_random_deterministic():
    ds = _dataset()
    a = select_random(ds, 1, seed=4)
    b = select_random(ds, 1, seed=4)
    assert np.array_equal(a.inputs, b.inputs)


def test_select_random_class_too_small():
    ds = _dataset()
    with pytest.raises(ValueError):
        select_random(ds, 1000, seed=0)


def test_select_centroid_one_dimensional():
    ds = Dataset(
        inputs=np.array([[0.0], [1.0], [2.0]]),
        labels=np.array([0, 0, 0]),
        class_count=1,
    )
    sel = select_centroid(ds, ds.inputs, 1)
    assert sel.inputs[0, 0] == 1.0


def test_select_centroid_tie_breaks_low_index():
    ds = Dataset(
        inputs=np.array([[1.0], [-1.0], [0.0]]),  # mean 0: rows 0 and 1 equidistant
        labels=np.array([0, 0, 0]),
        class_count=1,
    )
    sel = select_centroid(ds, ds.inputs, 1)
    assert sel.inputs[0, 0] == 0.0
    sel2 = select_centroid(ds, ds.inputs, 2)
    assert sel2.inputs[:, 0].tolist() == [0.0, 1.0]


def test_select_centroid_matches_brute_force():
    ds = _dataset()
    feats = ds.inputs
    sel = select_centroid(ds, feats, 1)
    for c in range(ds.class_count):
        idx = np.flatnonzero(ds.labels == c)
        mean = feats[idx].mean(axis=0)
        best = min(idx, key=lambda i: (np.sum((feats[i] - mean) ** 2), i))
        assert np.array_equal(sel.inputs[c], ds.inputs[best])


def test_select_neighbor_exact_row():
    ds = _dataset()
    syn_feats = np.stack([ds.inputs[ds.labels == c][0] for c in range(4)])
    sel = select_neighbor(ds, ds.inputs, syn_feats)
    assert np.array_equal(sel.inputs, syn_feats)


def test_select_neighbor_matches_brute_force_and_class_constraint():
    ds = _dataset()
    rng = np.random.default_rng(1)
    syn_feats = rng.standard_normal((4, 5))
    sel = select_neighbor(ds, ds.inputs, syn_feats)
    for c in range(4):
        idx = np.flatnonzero(ds.labels == c)
        best = min(idx, key=lambda i: (np.sum((ds.inputs[i] - syn_feats[c]) ** 2), i))
        assert np.array_equal(sel.inputs[c], ds.inputs[best])
        assert sel.labels[c] == c


def test_pca_two_dim_subspace_explains_everything():
    rng = np.random.default_rng(2)
    basis = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    coords = rng.standard_normal((50, 2)) * np.array([3.0, 1.0])
    x = coords @ basis.T
    _, explained = pca_project_2d(x)
    assert abs(sum(explained) - 1.0) <= 1e-9


def test_pca_isotropic_cloud_fractions():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((10_000, 5))
    _, explained = pca_project_2d(x)
    for frac in explained:
        assert 0.15 <= frac <= 0.25


def test_pca_translation_invariance():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((30, 4))
    proj, _ = pca_project_2d(x)
    proj_shift, _ = pca_project_2d(x + 7.5)
    assert np.allclose(proj, proj_shift, atol=1e-9)


def test_pca_rank_zero_input():
    x = np.tile(np.array([1.0, 2.0, 3.0]), (10, 1))
    proj, explained = pca_project_2d(x)
    assert np.array_equal(proj, np.zeros((10, 2)))
    assert explained == (0.0, 0.0)


def test_pca_sign_convention():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 3)) * np.array([5.0, 1.0, 0.2])
    proj1, _ = pca_project_2d(x)
    proj2, _ = pca_project_2d(x)
    assert np.array_equal(proj1, proj2)


def test_argmax_accuracy_scale_invariance():
    rng = np.random.default_rng(6)
    feats = rng.standard_normal((20, 4))
    labels = rng.integers(0, 3, size=20)
    w = rng.standard_normal((4, 3))
    from clpdd.linalg import row_argmax

    base = np.mean(row_argmax(feats @ w) == labels)
    scaled = np.mean(row_argmax(feats @ (3.7 * w)) == labels)
    assert base == scaled
