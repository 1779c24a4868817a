"""metrics -> normalisation -> clustering -> outcomes -> aggregation, plus the
writers for every result file."""

from __future__ import annotations

import csv
import datetime as _dt
import json
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .aggregation import (
    HeatmapGrid,
    PlayerProfile,
    DuoRecord,
    Projection,
    TeamStylePoint,
    duo_delta_tiv,
    player_profiles,
    project_2d,
    team_style_points,
    tiv_heatmap,
)
from .clustering import ARCHETYPE_ORDER, Archetype, ArchetypeModel, assign_all, fit_kmeans, label_clusters
from .config import AnalysisConfig
from .metrics import DensityParams, compute_all
from .normalize import NormStats, fit_norm_stats, normalize_all, z_matrix
from .outcomes import (
    OUTCOMES,
    OutcomeRecord,
    RateRow,
    annotate_outcomes,
    outcome_rates_by_archetype,
    outcome_rates_by_tiv_quantile,
    quantile_bins,
)
from .store import PassStore
from .types import ConfigError, PassEvent, StructuralFeatures, Weights


class ModelMismatchError(ValueError):
    pass


@dataclass
class Scored:
    passes: list[PassEvent]
    features: list[StructuralFeatures]
    clusters: np.ndarray
    archetypes: list[Archetype]


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    scored: Scored
    norm_stats: NormStats
    model: ArchetypeModel
    outcomes: list[OutcomeRecord]
    by_archetype: list[RateRow]
    by_quantile: list[RateRow]
    quantile_of: np.ndarray
    team_styles: list[TeamStylePoint]
    heatmaps: dict[str, HeatmapGrid]
    players: list[PlayerProfile]
    duos: list[DuoRecord]
    projection: Projection


def _features_chunk(args: tuple[list[PassEvent], DensityParams]) -> list[StructuralFeatures]:
    passes, params = args
    return compute_all(passes, params)


def raw_features(passes: Sequence[PassEvent], params: DensityParams, jobs: int = 1) -> list[StructuralFeatures]:
    """Raw metrics in input order; ``jobs > 1`` splits the work by match."""
    if jobs <= 1 or len(passes) < 2:
        return compute_all(passes, params)
    groups: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(passes):
        groups[p.match_id].append(i)
    keys = sorted(groups)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_features_chunk, [([passes[i] for i in groups[k]], params) for k in keys])
        out: list[StructuralFeatures | None] = [None] * len(passes)
        for k, feats in zip(keys, parts):
            for i, f in zip(groups[k], feats):
                out[i] = f
    return out  # type: ignore[return-value]


def annotate_store(store: PassStore, passes: Sequence[PassEvent], window_s: float) -> list[OutcomeRecord]:
    by_match: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(passes):
        by_match[p.match_id].append(i)
    out: list[OutcomeRecord | None] = [None] * len(passes)
    for mid, idx in by_match.items():
        recs = annotate_outcomes(
            [passes[i] for i in idx], store.timeline.get(mid, []), store.pitch_for(mid), window_s
        )
        for i, r in zip(idx, recs):
            out[i] = r
    return out  # type: ignore[return-value]


def analyze(store: PassStore, config: AnalysisConfig, jobs: int = 1) -> AnalysisResult:
    passes = store.passes
    if len(passes) < config.k:
        raise ValueError(f"need at least {config.k} passes to analyse, got {len(passes)}")
    raw = raw_features(passes, config.density_params, jobs)
    stats = fit_norm_stats(raw)
    feats = normalize_all(raw, stats, config.weights_obj)
    z = z_matrix(feats)
    model = fit_kmeans(z, config.k, config.seed, config.max_iter, config.tol, config.restarts)
    model = label_clusters(model, stats)
    clusters, archetypes = assign_all(z, model)
    tiv = [f.tiv for f in feats]

    outcomes = annotate_store(store, passes, config.window_s)
    nx, ny = config.grid
    pitch = config.pitch_obj
    return AnalysisResult(
        config=config,
        scored=Scored(list(passes), feats, clusters, archetypes),
        norm_stats=stats,
        model=model,
        outcomes=outcomes,
        by_archetype=outcome_rates_by_archetype(outcomes, archetypes),
        by_quantile=outcome_rates_by_tiv_quantile(outcomes, tiv, config.quantiles),
        quantile_of=quantile_bins(tiv, config.quantiles),
        team_styles=team_style_points([p.team_id for p in passes], archetypes, outcomes),
        heatmaps={
            mode: tiv_heatmap(passes, tiv, mode, nx, ny, pitch, config.min_count)
            for mode in ("origin", "destination")
        },
        players=player_profiles(passes, feats, archetypes, config.min_passes),
        duos=duo_delta_tiv(passes, tiv, outcomes, config.min_duo_count),
        projection=project_2d(z),
    )


# ------------------------------------------------------------------ model


def model_bundle(result: AnalysisResult) -> dict[str, Any]:
    c = result.config
    return {
        "format": "structpass-model/1",
        "sigma": c.sigma,
        "rho_floor": c.rho_floor,
        "weights": list(c.weights),
        "norm_stats": result.norm_stats.to_dict(),
        "kmeans": {"k": c.k, "max_iter": c.max_iter, "tol": c.tol, "restarts": c.restarts},
        "model": result.model.to_dict(),
    }


def score(store: PassStore, bundle: dict[str, Any], sigma: float | None = None, jobs: int = 1) -> Scored:
    """Score passes against a frozen model without refitting anything."""
    if sigma is not None and sigma != bundle["sigma"]:
        raise ModelMismatchError(
            f"model was fit with sigma={bundle['sigma']}, request uses sigma={sigma}; metrics are not comparable"
        )
    params = DensityParams(float(bundle["sigma"]), float(bundle["rho_floor"]))
    stats = NormStats.from_dict(bundle["norm_stats"])
    weights = Weights(*bundle["weights"])
    model = ArchetypeModel.from_dict(bundle["model"])
    raw = raw_features(store.passes, params, jobs)
    feats = normalize_all(raw, stats, weights)
    clusters, archetypes = assign_all(z_matrix(feats), model)
    return Scored(list(store.passes), feats, clusters, archetypes)


# ---------------------------------------------------------------- writers


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v != v:
            return ""
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


ARCH_COLS = [a.value for a in ARCHETYPE_ORDER]
FEATURE_HEADER = [
    "pass_id", "match_id", "team_id", "passer_id", "receiver_id", "period", "t",
    "start_x", "start_y", "end_x", "end_y", "n_defenders", "degenerate",
    "lbs", "sgm", "sdi", "z_lbs", "z_sgm", "z_sdi", "tiv", "cluster", "archetype",
]


def write_features(path: Path, s: Scored) -> None:
    rows = []
    for p, f, c, a in zip(s.passes, s.features, s.clusters, s.archetypes):
        rows.append([
            p.pass_id, p.match_id, p.team_id, p.passer_id, p.receiver_id, p.period, p.t,
            p.start.x, p.start.y, p.end.x, p.end.y, p.snapshot.n, p.degenerate,
            f.lbs, f.sgm, f.sdi, f.z_lbs, f.z_sgm, f.z_sdi, f.tiv, int(c), a.value,
        ])
    write_csv(path, FEATURE_HEADER, rows)


def _by_archetype(s: Scored) -> dict[Archetype, list[int]]:
    groups: dict[Archetype, list[int]] = {a: [] for a in ARCHETYPE_ORDER}
    for i, a in enumerate(s.archetypes):
        groups[a].append(i)
    return groups


def _stat(values: np.ndarray, fn) -> float | None:
    return float(fn(values)) if len(values) else None


def write_results(result: AnalysisResult, out_dir: str | Path, inputs: dict[str, Any] | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    s = result.scored
    c = result.config
    n = len(s.passes)
    groups = _by_archetype(s)
    raw = np.array([f.raw for f in s.features])
    tiv = np.array([f.tiv for f in s.features], dtype=float)

    write_features(out / "features.csv", s)
    (out / "model.json").write_text(json.dumps(model_bundle(result), indent=1) + "\n", encoding="utf-8")

    write_csv(
        out / "archetype_distribution.csv",
        ["archetype", "count", "percentage"],
        [[a.value, len(groups[a]), 100.0 * len(groups[a]) / n] for a in ARCHETYPE_ORDER],
    )
    write_csv(
        out / "archetype_metrics.csv",
        ["archetype", "count", "mean_lbs", "mean_sgm", "mean_sdi"],
        [
            [a.value, len(groups[a])] + [_stat(raw[groups[a], j], np.mean) for j in range(3)]
            for a in ARCHETYPE_ORDER
        ],
    )
    write_csv(
        out / "tiv_by_type.csv",
        ["archetype", "count", "mean_tiv", "median_tiv", "std_tiv"],
        [
            [a.value, len(groups[a]), _stat(tiv[groups[a]], np.mean),
             _stat(tiv[groups[a]], np.median), _stat(tiv[groups[a]], np.std)]
            for a in ARCHETYPE_ORDER
        ],
    )
    write_csv(
        out / "outcomes.csv",
        ["pass_id", *OUTCOMES, "window_s"],
        [[r.pass_id, *r.flags(), r.window_s] for r in result.outcomes],
    )
    write_csv(
        out / "outcomes_by_archetype.csv",
        ["archetype", "count", *OUTCOMES, "window_s"],
        [[row.key.value, row.count, *(row.rates[o] for o in OUTCOMES), c.window_s] for row in result.by_archetype],
    )
    q_rows = []
    for row in result.by_quantile:
        members = tiv[result.quantile_of == row.key]
        q_rows.append([
            row.key, row.count, _stat(members, np.min), _stat(members, np.max),
            *(row.rates[o] for o in OUTCOMES), c.window_s,
        ])
    write_csv(
        out / "outcomes_by_tiv_quantile.csv",
        ["quantile", "count", "tiv_min", "tiv_max", *OUTCOMES, "window_s"],
        q_rows,
    )
    write_csv(
        out / "team_styles.csv",
        ["team_id", "n_passes", "x_style", "y_style", "quadrant",
         *(f"share_{a}" for a in ARCH_COLS), "shot_prob", "box_entry_prob"],
        [
            [t.team_id, t.n_passes, t.x_style, t.y_style, t.quadrant,
             *(t.shares[a] for a in ARCHETYPE_ORDER), t.shot_prob, t.box_entry_prob]
            for t in result.team_styles
        ],
    )
    for mode, grid in result.heatmaps.items():
        means = grid.mean_tiv
        rows = []
        for r in range(grid.ny):
            for col in range(grid.nx):
                x0, x1, y0, y1 = grid.cell_bounds(r, col)
                cnt = int(grid.counts[r, col])
                rows.append([r, col, x0, x1, y0, y1, means[r, col] if cnt else None, cnt,
                             bool(grid.reliable[r, col])])
        write_csv(
            out / f"heatmap_{mode}.csv",
            ["row", "col", "x_min", "x_max", "y_min", "y_max", "mean_tiv", "count", "reliable"],
            rows,
        )
    write_csv(
        out / "players.csv",
        ["rank", "player_id", "n_passes", "mean_lbs", "mean_sgm", "mean_sdi", "cum_tiv", "mean_tiv",
         *(f"share_{a}" for a in ARCH_COLS)],
        [
            [i + 1, p.player_id, p.n_passes, p.mean_lbs, p.mean_sgm, p.mean_sdi, p.cum_tiv, p.mean_tiv,
             *(p.archetype_shares[a] for a in ARCHETYPE_ORDER)]
            for i, p in enumerate(result.players)
        ],
    )
    write_csv(
        out / "duos.csv",
        ["rank", "passer_id", "receiver_id", "n", "mean_tiv_pair", "passer_baseline_mean", "delta_tiv", *OUTCOMES],
        [
            [i + 1, d.passer_id, d.receiver_id, d.n, d.mean_tiv_pair, d.passer_baseline_mean, d.delta_tiv,
             *(d.outcome_probs.get(o) for o in OUTCOMES)]
            for i, d in enumerate(result.duos)
        ],
    )
    proj = result.projection
    write_csv(
        out / "projection.csv",
        ["pass_id", "pc1", "pc2", "archetype"],
        [[p.pass_id, xy[0], xy[1], a.value] for p, xy, a in zip(s.passes, proj.coords, s.archetypes)],
    )
    write_manifest(out, "analyze", c.to_dict(), inputs or {}, extra={
        "norm_stats": result.norm_stats.to_dict(),
        "projection": {
            "components": proj.components.tolist(),
            "explained_variance_ratio": proj.explained_variance_ratio.tolist(),
        },
        "n_passes": n,
        "kmeans_iterations": result.model.iterations,
        "notes": [
            "sigma and rho_floor are analysis choices; SGM values depend on both",
            "window_s is an analysis choice; outcome flags depend on it",
        ],
    })
    return out


def write_manifest(
    out: Path, command: str, params: dict[str, Any], inputs: dict[str, Any], extra: dict[str, Any] | None = None
) -> None:
    from .store import file_sha256

    outputs = {
        p.name: file_sha256(p) for p in sorted(out.iterdir()) if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "tool": "structpass",
        "version": __version__,
        "command": command,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "parameters": params,
        "inputs": inputs,
        "outputs": outputs,
    }
    manifest.update(extra or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def write_scored(scored: Scored, out_dir: str | Path, bundle: dict[str, Any], inputs: dict[str, Any]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_features(out / "features.csv", scored)
    params = {k: bundle[k] for k in ("sigma", "rho_floor", "weights")}
    write_manifest(out, "score", params, inputs, extra={"norm_stats": bundle["norm_stats"]})
    return out


