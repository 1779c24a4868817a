import random
from collections import defaultdict

import numpy as np
import pytest

from helpers import make_pass
from structpass.aggregation import (
    duo_delta_tiv,
    player_profiles,
    project_2d,
    style_coordinates,
    team_style_points,
    tiv_heatmap,
)
from structpass.clustering import ARCHETYPE_ORDER, Archetype
from structpass.outcomes import OutcomeRecord
from structpass.types import Pitch, StructuralFeatures

C, D, L, S = ARCHETYPE_ORDER


def rec(shot=False, box=False):
    return OutcomeRecord("p", False, box, shot, False, 10.0)


def test_style_examples():
    assert style_coordinates({C: 1.0, D: 0, L: 0, S: 0}) == (1.0, 0.0)
    # equal shares balance the second axis; the first follows its formula
    assert style_coordinates({a: 0.25 for a in ARCHETYPE_ORDER}) == (-0.25, 0.0)
    x, y = style_coordinates({C: 0.2, D: 0.4, L: 0.3, S: 0.1})
    assert (x, y) == pytest.approx((-0.2, 0.3))


def test_team_points_quadrant_and_probs():
    arch = [C, D, D, L, L, L, S, D, D, C]
    # shares (0.2, 0.4, 0.3, 0.1) for team T; 2 of 10 passes have shots
    outs = [rec(shot=i < 2, box=i < 5) for i in range(10)]
    (pt,) = team_style_points(["T"] * 10, arch, outs)
    assert pt.quadrant == "destabilising progression"
    assert sum(pt.shares.values()) == pytest.approx(1.0, abs=1e-9)
    assert (pt.shot_prob, pt.box_entry_prob) == (0.2, 0.5)


def test_team_shares_aggregate_to_corpus():
    rng = random.Random(2)
    teams = [rng.choice("ABCD") for _ in range(500)]
    arch = [rng.choice(ARCHETYPE_ORDER) for _ in range(500)]
    pts = team_style_points(teams, arch, [rec()] * 500)
    for a in ARCHETYPE_ORDER:
        pooled = sum(p.shares[a] * p.n_passes for p in pts) / 500
        assert pooled == pytest.approx(arch.count(a) / 500, abs=1e-12)


def test_heatmap_single_pass():
    g = tiv_heatmap([make_pass((10, 20), (30, 40), [(1, 1)])], [0.7], "origin", 12, 8)
    assert g.counts.sum() == 1
    r, c = np.argwhere(g.counts)[0]
    assert g.mean_tiv[r, c] == 0.7
    x0, x1, y0, y1 = g.cell_bounds(r, c)
    assert x0 <= 10 < x1 and y0 <= 20 < y1


def test_heatmap_two_passes_same_cell():
    ps = [make_pass((10, 20), (0, 0), [(1, 1)]), make_pass((11, 21), (0, 0), [(1, 1)])]
    g = tiv_heatmap(ps, [1.0, 3.0], "origin")
    assert g.counts.max() == 2 and np.nanmax(g.mean_tiv) == 2.0


def test_heatmap_boundaries():
    pitch = Pitch()
    g = tiv_heatmap([make_pass((0, 0), (pitch.width / 8, pitch.length), [(1, 1)])], [1.0], "destination", 12, 8)
    # cell boundary -> higher cell; far edge -> last cell
    assert g.counts[1, 11] == 1


def test_heatmap_constant_field_and_conservation():
    rng = random.Random(4)
    ps = [make_pass((rng.uniform(0, 68), rng.uniform(0, 105)), (rng.uniform(0, 68), rng.uniform(0, 105)), [(1, 1)])
          for _ in range(400)]
    for mode in ("origin", "destination"):
        g = tiv_heatmap(ps, [2.5] * 400, mode, min_count=5)
        assert g.counts.sum() == 400
        populated = g.counts > 0
        assert np.allclose(g.mean_tiv[populated], 2.5)
        assert np.array_equal(g.reliable, g.counts >= 5)


def test_heatmap_bad_mode():
    with pytest.raises(ValueError):
        tiv_heatmap([], [], "middle")


def feats(tivs):
    return [StructuralFeatures(1, 0.0, 0.0, 0.0, 0.0, 0.0, t) for t in tivs]


def test_single_player_single_pass():
    (p,) = player_profiles([make_pass((0, 0), (1, 1), [(5, 5)])], feats([0.5]), [C], min_passes=0)
    assert p.cum_tiv == p.mean_tiv == 0.5


def test_player_ties_by_id():
    ps = [make_pass((0, 0), (1, 1), [(5, 5)], passer=pid) for pid in ("H9", "H3")]
    out = player_profiles(ps, feats([1.0, 1.0]), [C, C], min_passes=0)
    assert [p.player_id for p in out] == ["H3", "H9"]


def test_player_min_passes():
    ps = [make_pass((0, 0), (1, 1), [(5, 5)])] * 3
    assert player_profiles(ps, feats([1, 1, 1]), [C] * 3, min_passes=4) == []


def random_corpus(n=600, seed=0):
    rng = random.Random(seed)
    ps = [
        make_pass((rng.uniform(0, 68), rng.uniform(0, 105)), (rng.uniform(0, 68), rng.uniform(0, 105)), [(5, 5)],
                  passer=f"H{rng.randint(2, 6)}", receiver=f"H{rng.randint(7, 11)}")
        for _ in range(n)
    ]
    fs = [StructuralFeatures(rng.randint(0, 5), rng.gauss(0, 2), rng.gauss(0, 9), 0.0, 0.0, 0.0, rng.gauss(0, 1))
          for _ in range(n)]
    arch = [rng.choice(ARCHETYPE_ORDER) for _ in range(n)]
    return ps, fs, arch


def test_players_match_brute_force_group_by():
    ps, fs, arch = random_corpus()
    groups = defaultdict(list)
    for p, f, a in zip(ps, fs, arch):
        groups[p.passer_id].append((f, a))
    for prof in player_profiles(ps, fs, arch, min_passes=0):
        rows = groups[prof.player_id]
        assert prof.n_passes == len(rows)
        assert prof.cum_tiv == pytest.approx(sum(f.tiv for f, _ in rows), abs=1e-9)
        assert prof.mean_sdi == pytest.approx(sum(f.sdi for f, _ in rows) / len(rows), abs=1e-9)
        assert prof.cum_tiv == pytest.approx(prof.mean_tiv * prof.n_passes, abs=1e-9)
        assert sum(prof.archetype_shares.values()) == pytest.approx(1.0)
        assert prof.archetype_shares[D] == pytest.approx(sum(a is D for _, a in rows) / len(rows))


def test_cum_tiv_conservation():
    ps, fs, arch = random_corpus(seed=3)
    total = sum(p.cum_tiv for p in player_profiles(ps, fs, arch, min_passes=0))
    assert total == pytest.approx(sum(f.tiv for f in fs), abs=1e-6)


def test_duo_examples():
    ps = [make_pass((0, 0), (1, 1), [(5, 5)], receiver="H4")] * 5
    (d,) = duo_delta_tiv(ps, [1, 2, 3, 4, 5], min_duo_count=1)
    assert d.delta_tiv == 0.0
    ps = [make_pass((0, 0), (1, 1), [(5, 5)], receiver=r) for r in ("H4", "H4", "H5", "H5", "H5")]
    tiv = [0.5, 0.5, 0.0, 0.0, 0.0]
    # passer mean 0.2, pair mean 0.5
    top = duo_delta_tiv(ps, tiv, min_duo_count=0)[0]
    assert (top.receiver_id, top.delta_tiv) == ("H4", pytest.approx(0.3))


def test_duo_decomposition_and_linearity():
    ps, fs, _ = random_corpus(seed=5)
    tiv = [f.tiv for f in fs]
    duos = duo_delta_tiv(ps, tiv, min_duo_count=0)
    by_passer = defaultdict(float)
    for d in duos:
        by_passer[d.passer_id] += d.n * d.delta_tiv
        assert d.delta_tiv == pytest.approx(d.mean_tiv_pair - d.passer_baseline_mean, abs=1e-12)
    assert all(abs(v) < 1e-9 for v in by_passer.values())
    neg = {(d.passer_id, d.receiver_id): d.delta_tiv for d in duo_delta_tiv(ps, [-t for t in tiv], min_duo_count=0)}
    for d in duos:
        assert neg[(d.passer_id, d.receiver_id)] == pytest.approx(-d.delta_tiv, abs=1e-12)
    assert all(d.n >= 5 for d in duo_delta_tiv(ps, tiv))


def test_duo_outcome_probs():
    ps = [make_pass((0, 0), (1, 1), [(5, 5)])] * 4
    outs = [rec(shot=i < 1) for i in range(4)]
    (d,) = duo_delta_tiv(ps, [0.0] * 4, outs, min_duo_count=1)
    assert d.outcome_probs["shot_in_window"] == 0.25


def test_projection_rank_one():
    t = np.linspace(-3, 3, 50)
    z = np.stack([t, 2 * t, -t], axis=1)
    pr = project_2d(z)
    assert np.allclose(pr.coords[:, 1], 0.0, atol=1e-9)
    assert pr.explained_variance_ratio[0] == pytest.approx(1.0)


def test_projection_isometry_on_plane():
    rng = np.random.default_rng(0)
    uv = rng.normal(size=(40, 2))
    basis = np.linalg.qr(rng.normal(size=(3, 2)))[0]
    z = uv @ basis.T
    pr = project_2d(z)
    d_in = np.linalg.norm(z[:, None] - z[None], axis=-1)
    d_out = np.linalg.norm(pr.coords[:, None] - pr.coords[None], axis=-1)
    assert np.allclose(d_in, d_out, atol=1e-6)


def test_projection_isotropic_and_signs():
    z = np.random.default_rng(1).normal(size=(20000, 3))
    pr = project_2d(z)
    assert pr.explained_variance_ratio.sum() == pytest.approx(2 / 3, abs=0.02)
    for comp in pr.components:
        assert comp[np.argmax(np.abs(comp))] > 0


def test_projection_needs_two():
    with pytest.raises(ValueError):
        project_2d(np.zeros((1, 3)))
