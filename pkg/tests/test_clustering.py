import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structpass.clustering import (
    ARCHETYPE_ORDER,
    Archetype,
    ArchetypeModel,
    assign,
    assign_all,
    fit_kmeans,
    label_clusters,
    nearest_cluster,
)
from structpass.normalize import NormStats

TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) * 3


def blobs(n_per=200, sd=0.1, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([c + rng.normal(0, sd, (n_per, 3)) for c in TETRA])
    y = np.repeat(np.arange(4), n_per)
    return x, y


def best_agreement(pred, truth, k=4):
    return max(
        np.mean(np.array(perm)[pred] == truth) for perm in itertools.permutations(range(k))
    )


def test_separated_blobs_recovered_exactly():
    x, y = blobs()
    m = fit_kmeans(x)
    idx = np.argmin(((x[:, None] - m.centroids[None]) ** 2).sum(-1), axis=1)
    assert best_agreement(idx, y) == 1.0


def test_identical_points():
    x = np.ones((10, 3))
    m = fit_kmeans(x)
    assert m.inertia == 0.0
    idx = np.argmin(((x[:, None] - m.centroids[None]) ** 2).sum(-1), axis=1)
    assert len(set(idx.tolist())) == 1


def test_k1_is_the_mean():
    x, _ = blobs(50)
    m = fit_kmeans(x, k=1)
    assert np.allclose(m.centroids[0], x.mean(axis=0), atol=1e-12)


def test_too_few_vectors():
    with pytest.raises(ValueError):
        fit_kmeans(np.zeros((3, 3)))


def test_determinism_and_monotone_inertia():
    x, _ = blobs(300, sd=1.2, seed=5)
    a, b = fit_kmeans(x, seed=7), fit_kmeans(x, seed=7)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.inertia_history == b.inertia_history
    h = a.inertia_history
    assert all(later <= earlier + 1e-9 for earlier, later in zip(h, h[1:]))


def test_centroids_are_cluster_means():
    x, _ = blobs(300, sd=1.5, seed=9)
    m = fit_kmeans(x)
    idx = np.argmin(((x[:, None] - m.centroids[None]) ** 2).sum(-1), axis=1)
    for j in range(4):
        assert np.allclose(x[idx == j].mean(axis=0), m.centroids[j], atol=1e-9)


def test_restarts_deterministic_and_keep_best():
    x, _ = blobs(200, sd=2.0, seed=11)
    a, b = fit_kmeans(x, restarts=5), fit_kmeans(x, restarts=5)
    assert np.array_equal(a.centroids, b.centroids)
    subs = np.random.SeedSequence(42).spawn(5)
    from structpass.clustering import _lloyd, kmeans_plus_plus

    singles = [_lloyd(x, kmeans_plus_plus(x, 4, np.random.default_rng(s)), 300, 1e-6)[2][-1] for s in subs]
    assert a.inertia == min(singles)


def _model(c):
    return ArchetypeModel(np.asarray(c, dtype=float), 42, 1, 0.0)


SIG = [[0, 0, 0], [0, 0, 3], [3, 0, 0], [0, 3, 0]]  # circ, dest, lb, se


def test_label_signature():
    m = label_clusters(_model(SIG))
    assert [m.labels[i] for i in range(4)] == [
        Archetype.CIRCULATORY, Archetype.DESTABILISING, Archetype.LINE_BREAKING, Archetype.SPACE_EXPANDING,
    ]
    assert sorted(m.labels.values()) == sorted(ARCHETYPE_ORDER)


def test_label_follows_centroid_under_permutation():
    base = label_clusters(_model(SIG))
    for perm in itertools.permutations(range(4)):
        m = label_clusters(_model([SIG[i] for i in perm]))
        for new_i, old_i in enumerate(perm):
            assert m.labels[new_i] == base.labels[old_i]


def test_label_tie_goes_to_lower_index():
    m = label_clusters(_model([[2, 0, 0], [2, 0, 0], [0, 1, 0], [0, 0, 1]]))
    assert m.labels[0] == Archetype.LINE_BREAKING


def test_raw_centroids_from_norm_stats():
    stats = NormStats(1.0, 2.0, 3.0, 2.0, 2.0, 2.0, 10)
    m = label_clusters(_model(SIG), stats)
    assert np.allclose(m.raw_centroids[2], [7.0, 2.0, 3.0])


def test_assign_examples():
    m = label_clusters(_model(SIG))
    assert assign(SIG[2], m) == Archetype.LINE_BREAKING
    # equidistant between clusters 0 and 1 -> lower index
    assert nearest_cluster([0, 0, 1.5], m) == 0
    with pytest.raises(ValueError):
        assign([0, 0, 0], _model(SIG))


@settings(max_examples=200)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_assign_matches_linear_scan(v):
    m = label_clusters(_model(np.random.default_rng(1).normal(size=(4, 3))))
    d = [sum((a - b) ** 2 for a, b in zip(v, c)) for c in m.centroids.tolist()]
    assert nearest_cluster(v, m) == d.index(min(d))
    idx, arch = assign_all(np.array([v]), m)
    assert int(idx[0]) == d.index(min(d)) and arch[0] == m.labels[int(idx[0])]


def test_model_round_trip():
    x, _ = blobs(50)
    m = label_clusters(fit_kmeans(x), NormStats(0, 0, 0, 1, 1, 1, 200))
    back = ArchetypeModel.from_dict(m.to_dict())
    assert np.array_equal(back.centroids, m.centroids)
    assert back.labels == m.labels
    assert back.inertia_history == m.inertia_history
