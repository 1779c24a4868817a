"""Raw structural metrics of a pass against the defensive snapshot.

* line bypass score: defenders whose attacking-axis coordinate lies in
  ``(y_start, y_end]``
* space gain: change in inverse Gaussian defensive density from start to end
* structural disruption: change in ball distance to the defensive centroid
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .types import ConfigError, PassEvent, Point2D, DefensiveSnapshot, StructuralFeatures

DEFAULT_SIGMA = 10.0
DEFAULT_RHO_FLOOR = 1e-6


@dataclass(frozen=True)
class DensityParams:
    sigma: float = DEFAULT_SIGMA
    rho_floor: float = DEFAULT_RHO_FLOOR

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.rho_floor > 0:
            raise ConfigError(f"rho_floor must be positive, got {self.rho_floor}")


def _require_defense(snapshot: DefensiveSnapshot) -> None:
    if snapshot.n < 1:
        raise ValueError("metric requires at least one defender")


def line_bypass_score(p: PassEvent) -> int:
    _require_defense(p.snapshot)
    ys = p.snapshot.array[:, 1]
    return int(np.count_nonzero((ys > p.start.y) & (ys <= p.end.y)))


def defensive_density(x: Point2D, snapshot: DefensiveSnapshot, params: DensityParams) -> float:
    """Sum of isotropic Gaussian kernels centred on the defenders, floored."""
    _require_defense(snapshot)
    d = snapshot.array - (x.x, x.y)
    sq = np.einsum("ij,ij->i", d, d)
    rho = float(np.exp(-sq / (2.0 * params.sigma**2)).sum())
    return max(rho, params.rho_floor)


def available_space(x: Point2D, snapshot: DefensiveSnapshot, params: DensityParams) -> float:
    return 1.0 / defensive_density(x, snapshot, params)


def space_gain(p: PassEvent, params: DensityParams) -> float:
    if p.start == p.end:
        return 0.0
    return available_space(p.end, p.snapshot, params) - available_space(
        p.start, p.snapshot, params
    )


def structural_disruption(p: PassEvent) -> float:
    _require_defense(p.snapshot)
    if p.start == p.end:
        return 0.0
    c = p.snapshot.centroid
    return p.end.distance(c) - p.start.distance(c)


def compute_features(p: PassEvent, params: DensityParams) -> StructuralFeatures:
    return StructuralFeatures(
        lbs=line_bypass_score(p),
        sgm=space_gain(p, params),
        sdi=structural_disruption(p),
    )


def compute_all(passes: Iterable[PassEvent], params: DensityParams) -> list[StructuralFeatures]:
    return [compute_features(p, params) for p in passes]
