"""K-means over (z_lbs, z_sgm, z_sdi) and the mapping of clusters to archetypes.

Lloyd iterations start from seeded k-means++ centres. Assignment ties go to
the lowest cluster index, and an empty cluster is re-seeded with the point
lying farthest from its current centre.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .normalize import NormStats

DEFAULT_K = 4
DEFAULT_SEED = 42
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-6


class Archetype(str, enum.Enum):
    CIRCULATORY = "Circulatory"
    DESTABILISING = "Destabilising"
    LINE_BREAKING = "LineBreaking"
    SPACE_EXPANDING = "SpaceExpanding"


# Output order for every archetype-keyed table.
ARCHETYPE_ORDER = (
    Archetype.CIRCULATORY,
    Archetype.DESTABILISING,
    Archetype.LINE_BREAKING,
    Archetype.SPACE_EXPANDING,
)


@dataclass(frozen=True)
class ArchetypeModel:
    centroids: np.ndarray
    seed: int
    iterations: int
    inertia: float
    inertia_history: tuple[float, ...] = ()
    labels: dict[int, Archetype] = field(default_factory=dict)
    raw_centroids: np.ndarray | None = None

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def is_labeled(self) -> bool:
        return len(self.labels) == self.k

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "centroids": self.centroids.tolist(),
            "labels": {str(i): a.value for i, a in sorted(self.labels.items())},
            "seed": self.seed,
            "iterations": self.iterations,
            "inertia": self.inertia,
            "inertia_history": list(self.inertia_history),
        }
        if self.raw_centroids is not None:
            out["raw_centroids"] = self.raw_centroids.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ArchetypeModel:
        raw = d.get("raw_centroids")
        return cls(
            centroids=np.asarray(d["centroids"], dtype=float),
            seed=int(d["seed"]),
            iterations=int(d["iterations"]),
            inertia=float(d["inertia"]),
            inertia_history=tuple(float(v) for v in d.get("inertia_history", ())),
            labels={int(i): Archetype(a) for i, a in d.get("labels", {}).items()},
            raw_centroids=None if raw is None else np.asarray(raw, dtype=float),
        )


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _nearest(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = _sq_dists(x, centroids)
    # argmin returns the first minimum, i.e. the lowest cluster index
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(len(x)), idx]


def kmeans_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding.

    Each new centre is the best of ``2 + floor(ln k)`` D^2-weighted draws,
    judged by the resulting potential.
    """
    n = len(x)
    trials = 2 + int(np.log(k))
    first = int(rng.integers(n))
    chosen = [first]
    closest = np.einsum("ij,ij->i", x - x[first], x - x[first])
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point coincides with a chosen centre
            nxt = next((i for i in range(n) if i not in chosen), 0)
            chosen.append(nxt)
            continue
        cands = rng.choice(n, size=trials, p=closest / total)
        best, best_pot, best_closest = -1, np.inf, closest
        for c in cands:
            d = x - x[c]
            new_closest = np.minimum(closest, np.einsum("ij,ij->i", d, d))
            pot = new_closest.sum()
            if pot < best_pot:
                best, best_pot, best_closest = int(c), pot, new_closest
        chosen.append(best)
        closest = best_closest
    return x[chosen].copy()


def _reseed_empty(
    x: np.ndarray, centroids: np.ndarray, assign: np.ndarray, d2: np.ndarray
) -> None:
    k = len(centroids)
    counts = np.bincount(assign, minlength=k)
    for j in range(k):
        if counts[j] > 0:
            continue
        far = int(np.argmax(d2))
        if d2[far] <= 0:
            # nothing left to split off; cluster stays empty
            continue
        counts[assign[far]] -= 1
        assign[far] = j
        counts[j] = 1
        centroids[j] = x[far]
        d2[far] = 0.0


def _lloyd(
    x: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float
) -> tuple[np.ndarray, np.ndarray, list[float], int]:
    k = len(centroids)
    history: list[float] = []
    prev_assign: np.ndarray | None = None
    it = 0
    for it in range(1, max_iter + 1):
        assign, d2 = _nearest(x, centroids)
        _reseed_empty(x, centroids, assign, d2)
        history.append(float(d2.sum()))
        new = _means(x, assign, centroids)
        shift = float(np.max(np.linalg.norm(new - centroids, axis=1)))
        centroids = new
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign
        if shift < tol:
            break
    # closing half-step so every centroid is exactly the mean of its members
    assign, d2 = _nearest(x, centroids)
    _reseed_empty(x, centroids, assign, d2)
    centroids = _means(x, assign, centroids)
    diff = x - centroids[assign]
    final = float(np.einsum("ij,ij->i", diff, diff).sum())
    if final < history[-1]:
        history.append(final)
    return centroids, assign, history, it


def _means(x: np.ndarray, assign: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    new = centroids.copy()
    for j in range(len(centroids)):
        members = x[assign == j]
        if len(members):
            new[j] = members.mean(axis=0)
    return new


def fit_kmeans(
    z_vectors: Sequence[Sequence[float]] | np.ndarray,
    k: int = DEFAULT_K,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    restarts: int = 1,
) -> ArchetypeModel:
    """Fit an unlabeled model; with ``restarts > 1`` keep the lowest inertia."""
    x = np.asarray(z_vectors, dtype=float).reshape(-1, 3) if len(z_vectors) else np.zeros((0, 3))
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(x) < k:
        raise ValueError(f"need at least k={k} vectors, got {len(x)}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")

    sub_seeds = np.random.SeedSequence(seed).spawn(restarts) if restarts > 1 else None
    best: ArchetypeModel | None = None
    for r in range(restarts):
        rng = np.random.default_rng(seed if sub_seeds is None else sub_seeds[r])
        init = kmeans_plus_plus(x, k, rng)
        centroids, _, history, iters = _lloyd(x, init, max_iter, tol)
        model = ArchetypeModel(
            centroids=centroids,
            seed=seed,
            iterations=iters,
            inertia=history[-1],
            inertia_history=tuple(history),
        )
        if best is None or model.inertia < best.inertia:
            best = model
    assert best is not None
    return best


def label_clusters(model: ArchetypeModel, norm_stats: NormStats | None = None) -> ArchetypeModel:
    """Name the four centroids by which metric dominates them.

    Line-breaking takes the highest z_lbs; of the rest, space-expanding takes
    the highest z_sgm and destabilising the highest z_sdi; the remaining
    centroid is circulatory. ``np.argmax`` keeps the lowest index on ties.
    """
    if model.k != 4:
        raise ValueError(f"labeling needs exactly 4 centroids, got {model.k}")
    c = model.centroids
    remaining = list(range(4))
    labels: dict[int, Archetype] = {}
    for col, arch in ((0, Archetype.LINE_BREAKING), (1, Archetype.SPACE_EXPANDING), (2, Archetype.DESTABILISING)):
        pick = remaining[int(np.argmax(c[remaining, col]))]
        labels[pick] = arch
        remaining.remove(pick)
    labels[remaining[0]] = Archetype.CIRCULATORY
    raw = None
    if norm_stats is not None:
        raw = c * np.asarray(norm_stats.sd) + np.asarray(norm_stats.mu)
    return replace(model, labels=labels, raw_centroids=raw)


def nearest_cluster(z_vector: Sequence[float], model: ArchetypeModel) -> int:
    z = np.asarray(z_vector, dtype=float).reshape(1, 3)
    idx, _ = _nearest(z, model.centroids)
    return int(idx[0])


def assign(z_vector: Sequence[float], model: ArchetypeModel) -> Archetype:
    if not model.is_labeled:
        raise ValueError("model must be labeled before assignment")
    return model.labels[nearest_cluster(z_vector, model)]


def assign_all(z: np.ndarray, model: ArchetypeModel) -> tuple[np.ndarray, list[Archetype]]:
    """Vectorised nearest-centroid assignment; returns cluster indices and archetypes."""
    if not model.is_labeled:
        raise ValueError("model must be labeled before assignment")
    if len(z) == 0:
        return np.zeros(0, dtype=int), []
    idx, _ = _nearest(np.asarray(z, dtype=float).reshape(-1, 3), model.centroids)
    return idx, [model.labels[int(i)] for i in idx]
