"""Team style space, TIV heatmaps, player profiles, passer-receiver duos and
the 2-D projection of the structural space."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clustering import ARCHETYPE_ORDER, Archetype
from .outcomes import OUTCOMES, OutcomeRecord
from .types import PassEvent, Pitch, StructuralFeatures

DEFAULT_GRID = (12, 8)
DEFAULT_MIN_COUNT = 10
DEFAULT_MIN_PASSES = 30
DEFAULT_MIN_DUO_COUNT = 5

QUADRANTS = {
    (True, True): "circulatory destabilisation",
    (True, False): "space expansion",
    (False, True): "destabilising progression",
    (False, False): "direct progression",
}


def _shares(archetypes: Sequence[Archetype]) -> dict[Archetype, float]:
    n = len(archetypes)
    return {a: sum(1 for x in archetypes if x == a) / n for a in ARCHETYPE_ORDER}


# ------------------------------------------------------------ team styles


@dataclass(frozen=True)
class TeamStylePoint:
    team_id: str
    n_passes: int
    x_style: float
    y_style: float
    shares: dict[Archetype, float]
    shot_prob: float
    box_entry_prob: float

    @property
    def quadrant(self) -> str:
        return QUADRANTS[(self.x_style >= 0, self.y_style >= 0)]


def style_coordinates(shares: dict[Archetype, float]) -> tuple[float, float]:
    """Circulation-vs-progression and destabilise-vs-expand contrasts."""
    circ = shares.get(Archetype.CIRCULATORY, 0.0)
    dest = shares.get(Archetype.DESTABILISING, 0.0)
    lb = shares.get(Archetype.LINE_BREAKING, 0.0)
    se = shares.get(Archetype.SPACE_EXPANDING, 0.0)
    return circ - lb - se, dest - se


def team_style_points(
    team_ids: Sequence[str],
    archetypes: Sequence[Archetype],
    outcomes: Sequence[OutcomeRecord],
) -> list[TeamStylePoint]:
    """One style point per team, ordered by team id; inputs are per pass."""
    if not len(team_ids) == len(archetypes) == len(outcomes):
        raise ValueError("team_ids, archetypes and outcomes must align per pass")
    by_team: dict[str, list[int]] = defaultdict(list)
    for i, t in enumerate(team_ids):
        by_team[t].append(i)
    points = []
    for team in sorted(by_team):
        idx = by_team[team]
        shares = _shares([archetypes[i] for i in idx])
        x, y = style_coordinates(shares)
        points.append(
            TeamStylePoint(
                team_id=team,
                n_passes=len(idx),
                x_style=x,
                y_style=y,
                shares=shares,
                shot_prob=sum(outcomes[i].shot_in_window for i in idx) / len(idx),
                box_entry_prob=sum(outcomes[i].box_entry for i in idx) / len(idx),
            )
        )
    return points


# ---------------------------------------------------------------- heatmap


@dataclass(frozen=True)
class HeatmapGrid:
    """Per-cell TIV statistics; column index runs along the attacking axis,
    row index across the pitch width."""

    nx: int
    ny: int
    mode: str
    pitch: Pitch
    sums: np.ndarray
    counts: np.ndarray
    min_count: int = DEFAULT_MIN_COUNT

    @property
    def mean_tiv(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    @property
    def reliable(self) -> np.ndarray:
        return self.counts >= self.min_count

    def cell_bounds(self, row: int, col: int) -> tuple[float, float, float, float]:
        dx = self.pitch.width / self.ny
        dy = self.pitch.length / self.nx
        return (row * dx, (row + 1) * dx, col * dy, (col + 1) * dy)


def _bin(coord: np.ndarray, extent: float, n: int) -> np.ndarray:
    # lower-closed cells; the far edge (and tolerance overshoot) folds into the last cell
    return np.clip(np.floor(coord / extent * n).astype(int), 0, n - 1)


def tiv_heatmap(
    passes: Sequence[PassEvent],
    tiv: Sequence[float],
    mode: str = "origin",
    nx: int = DEFAULT_GRID[0],
    ny: int = DEFAULT_GRID[1],
    pitch: Pitch | None = None,
    min_count: int = DEFAULT_MIN_COUNT,
) -> HeatmapGrid:
    if mode not in ("origin", "destination"):
        raise ValueError(f"mode must be 'origin' or 'destination', got {mode!r}")
    if nx < 1 or ny < 1:
        raise ValueError("grid needs at least one cell per axis")
    if len(passes) != len(tiv):
        raise ValueError("one TIV value per pass required")
    pitch = pitch or Pitch()
    pts = [p.start if mode == "origin" else p.end for p in passes]
    sums = np.zeros((ny, nx))
    counts = np.zeros((ny, nx), dtype=int)
    if pts:
        xs = np.array([q.x for q in pts])
        ys = np.array([q.y for q in pts])
        rows = _bin(xs, pitch.width, ny)
        cols = _bin(ys, pitch.length, nx)
        np.add.at(sums, (rows, cols), np.asarray(tiv, dtype=float))
        np.add.at(counts, (rows, cols), 1)
    return HeatmapGrid(nx, ny, mode, pitch, sums, counts, min_count)


# --------------------------------------------------------------- players


@dataclass(frozen=True)
class PlayerProfile:
    player_id: str
    n_passes: int
    mean_lbs: float
    mean_sgm: float
    mean_sdi: float
    cum_tiv: float
    mean_tiv: float
    archetype_shares: dict[Archetype, float]


def player_profiles(
    passes: Sequence[PassEvent],
    features: Sequence[StructuralFeatures],
    archetypes: Sequence[Archetype],
    min_passes: int = DEFAULT_MIN_PASSES,
) -> list[PlayerProfile]:
    """Passer aggregates ranked by cumulative TIV (descending, then id)."""
    by_player: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(passes):
        by_player[p.passer_id].append(i)
    out = []
    for pid, idx in by_player.items():
        if len(idx) < min_passes:
            continue
        raw = np.array([features[i].raw for i in idx])
        tiv = np.array([features[i].tiv for i in idx], dtype=float)
        cum = float(tiv.sum())
        out.append(
            PlayerProfile(
                player_id=pid,
                n_passes=len(idx),
                mean_lbs=float(raw[:, 0].mean()),
                mean_sgm=float(raw[:, 1].mean()),
                mean_sdi=float(raw[:, 2].mean()),
                cum_tiv=cum,
                mean_tiv=cum / len(idx),
                archetype_shares=_shares([archetypes[i] for i in idx]),
            )
        )
    out.sort(key=lambda r: (-r.cum_tiv, r.player_id))
    return out


# ------------------------------------------------------------------ duos


@dataclass(frozen=True)
class DuoRecord:
    passer_id: str
    receiver_id: str
    n: int
    mean_tiv_pair: float
    passer_baseline_mean: float
    delta_tiv: float
    outcome_probs: dict[str, float]


def duo_delta_tiv(
    passes: Sequence[PassEvent],
    tiv: Sequence[float],
    outcomes: Sequence[OutcomeRecord] | None = None,
    min_duo_count: int = DEFAULT_MIN_DUO_COUNT,
) -> list[DuoRecord]:
    """Mean TIV of each passer->receiver pair minus the passer's overall mean."""
    by_passer: dict[str, list[int]] = defaultdict(list)
    by_pair: dict[tuple[str, str], list[int]] = defaultdict(list)
    for i, p in enumerate(passes):
        by_passer[p.passer_id].append(i)
        by_pair[(p.passer_id, p.receiver_id)].append(i)
    tiv = np.asarray(tiv, dtype=float)
    baseline = {pid: float(tiv[idx].mean()) for pid, idx in by_passer.items()}
    out = []
    for (passer, receiver), idx in by_pair.items():
        if len(idx) < min_duo_count:
            continue
        pair_mean = float(tiv[idx].mean())
        probs: dict[str, float] = {}
        if outcomes is not None:
            flags = np.array([outcomes[i].flags() for i in idx], dtype=float)
            probs = {name: float(v) for name, v in zip(OUTCOMES, flags.mean(axis=0))}
        out.append(
            DuoRecord(
                passer_id=passer,
                receiver_id=receiver,
                n=len(idx),
                mean_tiv_pair=pair_mean,
                passer_baseline_mean=baseline[passer],
                delta_tiv=pair_mean - baseline[passer],
                outcome_probs=probs,
            )
        )
    out.sort(key=lambda d: (-d.delta_tiv, d.passer_id, d.receiver_id))
    return out


# ------------------------------------------------------------ projection


@dataclass(frozen=True)
class Projection:
    coords: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray


def project_2d(z_vectors: np.ndarray | Sequence[Sequence[float]]) -> Projection:
    """PCA onto the top two principal components.

    Each component is signed so that its largest-magnitude loading is
    positive. Directions without variance project to zero.
    """
    z = np.asarray(z_vectors, dtype=float)
    if z.ndim != 2 or len(z) < 2:
        raise ValueError("projection needs at least 2 vectors")
    centred = z - z.mean(axis=0)
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    var = s**2
    total = var.sum()
    comps = np.zeros((2, z.shape[1]))
    ratios = np.zeros(2)
    scale = s[0] if len(s) else 0.0
    for i in range(min(2, len(s))):
        if total <= 0 or s[i] <= 1e-12 * scale:
            continue
        v = vt[i]
        j = int(np.argmax(np.abs(v)))
        comps[i] = v if v[j] > 0 else -v
        ratios[i] = var[i] / total
    return Projection(centred @ comps.T, comps, ratios)
