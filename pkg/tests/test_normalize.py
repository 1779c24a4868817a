import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structpass.normalize import (
    FitError,
    NormStats,
    fit_norm_stats,
    normalize,
    normalize_all,
    tactical_impact_value,
    z_matrix,
)
from structpass.types import StructuralFeatures, Weights


def F(lbs, sgm, sdi):
    return StructuralFeatures(lbs, float(sgm), float(sdi))


def test_fit_population_statistics():
    s = fit_norm_stats([F(0, 0, 0), F(2, 4, 6)])
    assert s.mu == (1.0, 2.0, 3.0)
    assert s.sd == (1.0, 2.0, 3.0)
    assert s.n_fit == 2


def test_identical_features_have_zero_sd():
    s = fit_norm_stats([F(1, 2, 3)] * 5)
    assert s.sd == (0.0, 0.0, 0.0)
    f = normalize(F(1, 2, 3), s)
    assert f.z == (0.0, 0.0, 0.0)
    assert f.tiv == 0.0


def test_single_feature_cannot_be_fit():
    with pytest.raises(FitError):
        fit_norm_stats([F(1, 2, 3)])


def test_normalize_examples():
    s = NormStats(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10)
    assert normalize(F(1, 1, 1), s).z == (0.0, 0.0, 0.0)
    assert normalize(F(3, 3, 3), s).z == (2.0, 2.0, 2.0)
    zero_sd = NormStats(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 10)
    assert normalize(F(5, 1, 1), zero_sd).z_lbs == 0.0


def test_tiv_examples():
    f = StructuralFeatures(0, 0.0, 0.0, 3.0, 0.0, 0.0)
    assert tactical_impact_value(f, Weights()) == pytest.approx(1.0, abs=1e-12)
    g = StructuralFeatures(0, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert tactical_impact_value(g, Weights()) == 0.0
    assert tactical_impact_value(f, Weights(0.5, 0.25, 0.25)) == pytest.approx(1.5)


def test_norm_stats_round_trip():
    s = fit_norm_stats([F(0, 0.5, 1), F(3, 4, -6), F(1, 1, 1)])
    assert NormStats.from_dict(s.to_dict()) == s


feature_lists = st.lists(
    st.tuples(st.integers(0, 10), st.floats(-1e3, 1e3), st.floats(-60, 60)),
    min_size=2, max_size=60,
)


@given(feature_lists)
def test_z_columns_standardised(rows):
    feats = [F(*r) for r in rows]
    stats = fit_norm_stats(feats)
    z = z_matrix(normalize_all(feats, stats))
    for k in range(3):
        assert abs(z[:, k].mean()) <= 1e-9
        if stats.sd[k] > 1e-9 * max(1.0, abs(stats.mu[k])):
            assert abs(z[:, k].std() - 1.0) <= 1e-9
    tiv = np.array([f.tiv for f in normalize_all(feats, stats)])
    assert abs(tiv.mean()) <= 1e-9
    # default equal weights -> TIV is the mean of the z columns
    assert np.allclose(tiv, z.mean(axis=1), atol=1e-12)


@settings(max_examples=50)
@given(feature_lists, st.integers(0, 2), st.floats(0.01, 100))
def test_tiv_ranking_invariant_to_rescaling(rows, col, c):
    feats = [F(*r) for r in rows]
    scaled = []
    for r in rows:
        r = list(r)
        r[col] = r[col] * c
        scaled.append(StructuralFeatures(r[0], r[1], r[2]))  # lbs may become fractional
    a = [f.tiv for f in normalize_all(feats, fit_norm_stats(feats))]
    b = [f.tiv for f in normalize_all(scaled, fit_norm_stats(scaled))]
    assert np.allclose(a, b, atol=1e-9)


def test_weight_scaling_preserves_ranking():
    rng = np.random.default_rng(0)
    feats = [F(int(a), b, c) for a, b, c in zip(rng.integers(0, 8, 200), rng.normal(0, 3, 200), rng.normal(0, 10, 200))]
    stats = fit_norm_stats(feats)
    a = [f.tiv for f in normalize_all(feats, stats, Weights.normalized(1, 2, 3))]
    b = [f.tiv for f in normalize_all(feats, stats, Weights.normalized(5, 10, 15))]
    assert list(np.argsort(a, kind="stable")) == list(np.argsort(b, kind="stable"))
