"""Canonical domain types shared by every pipeline stage.

Coordinates live in the canonical attacking frame: ``x`` runs across the
pitch width, ``y`` along the attacking direction of the team in possession,
with that team's own goal line at ``y = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

OUT_OF_BOUNDS_TOLERANCE = 2.0
MAX_OUTFIELD_DEFENDERS = 10


class ConfigError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclass(frozen=True)
class Pitch:
    length: float = 105.0
    width: float = 68.0
    box_depth: float = 16.5
    box_width: float = 40.32

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise ConfigError(f"pitch dimensions must be positive, got {self.length}x{self.width}")
        if self.box_depth <= 0 or self.box_width <= 0:
            raise ConfigError("penalty box dimensions must be positive")
        if self.box_depth > self.length or self.box_width > self.width:
            raise ConfigError("penalty box does not fit inside the pitch")

    @property
    def final_third_line(self) -> float:
        return 2.0 * self.length / 3.0

    def in_final_third(self, p: Point2D) -> bool:
        return p.y > self.final_third_line

    def in_box(self, p: Point2D) -> bool:
        """Opponent's penalty box, i.e. the one the attacking team shoots at."""
        half = self.box_width / 2.0
        return p.y > self.length - self.box_depth and abs(p.x - self.width / 2.0) <= half

    def contains(self, p: Point2D, tolerance: float = OUT_OF_BOUNDS_TOLERANCE) -> bool:
        return (
            -tolerance <= p.x <= self.width + tolerance
            and -tolerance <= p.y <= self.length + tolerance
        )

    def to_dict(self) -> dict[str, float]:
        return {
            "length": self.length,
            "width": self.width,
            "box_depth": self.box_depth,
            "box_width": self.box_width,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> Pitch:
        if not d:
            return cls()
        keys = ("length", "width", "box_depth", "box_width")
        return cls(**{k: float(d[k]) for k in keys if k in d})


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def distance(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_list(self) -> list[float]:
        return [self.x, self.y]

    @classmethod
    def of(cls, xy: Any) -> Point2D:
        return cls(float(xy[0]), float(xy[1]))


@dataclass(frozen=True)
class DefensiveSnapshot:
    """Outfield players of the team out of possession at pass time."""

    defenders: tuple[Point2D, ...]
    frame_id: int = -1

    @property
    def n(self) -> int:
        return len(self.defenders)

    @cached_property
    def array(self) -> np.ndarray:
        """Defender positions as an ``(n, 2)`` float array."""
        if not self.defenders:
            return np.zeros((0, 2))
        return np.array([(d.x, d.y) for d in self.defenders], dtype=float)

    @cached_property
    def centroid(self) -> Point2D:
        if not self.defenders:
            raise ValueError("centroid of an empty defensive snapshot")
        return Point2D(
            math.fsum(d.x for d in self.defenders) / self.n,
            math.fsum(d.y for d in self.defenders) / self.n,
        )


@dataclass(frozen=True)
class PassEvent:
    pass_id: str
    match_id: str
    team_id: str
    passer_id: str
    receiver_id: str
    t: float
    start: Point2D
    end: Point2D
    snapshot: DefensiveSnapshot
    period: int = 1

    @property
    def degenerate(self) -> bool:
        """Zero-length pass; still scored, excluded from sign interpretation."""
        return self.start == self.end

    def to_dict(self) -> dict[str, Any]:
        return {
            "pass_id": self.pass_id,
            "match_id": self.match_id,
            "team_id": self.team_id,
            "passer_id": self.passer_id,
            "receiver_id": self.receiver_id,
            "t": self.t,
            "period": self.period,
            "start": self.start.as_list(),
            "end": self.end.as_list(),
            "frame_id": self.snapshot.frame_id,
            "defenders": [d.as_list() for d in self.snapshot.defenders],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PassEvent:
        return cls(
            pass_id=str(d["pass_id"]),
            match_id=str(d["match_id"]),
            team_id=str(d["team_id"]),
            passer_id=str(d["passer_id"]),
            receiver_id=str(d["receiver_id"]),
            t=float(d["t"]),
            period=int(d.get("period", 1)),
            start=Point2D.of(d["start"]),
            end=Point2D.of(d["end"]),
            snapshot=DefensiveSnapshot(
                tuple(Point2D.of(p) for p in d["defenders"]),
                frame_id=int(d.get("frame_id", -1)),
            ),
        )


@dataclass(frozen=True)
class StructuralFeatures:
    lbs: int
    sgm: float
    sdi: float
    z_lbs: float | None = None
    z_sgm: float | None = None
    z_sdi: float | None = None
    tiv: float | None = None

    @property
    def raw(self) -> tuple[float, float, float]:
        return (float(self.lbs), self.sgm, self.sdi)

    @property
    def z(self) -> tuple[float, float, float]:
        if self.z_lbs is None or self.z_sgm is None or self.z_sdi is None:
            raise ValueError("features have not been normalized")
        return (self.z_lbs, self.z_sgm, self.z_sdi)


@dataclass(frozen=True)
class Weights:
    w1: float = 1.0 / 3.0
    w2: float = 1.0 / 3.0
    w3: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        ws = (self.w1, self.w2, self.w3)
        if any(not math.isfinite(w) or w < 0 for w in ws):
            raise ConfigError(f"weights must be finite and non-negative, got {ws}")
        if abs(math.fsum(ws) - 1.0) > 1e-12:
            raise ConfigError(f"weights must sum to 1, got {math.fsum(ws)!r}")

    @classmethod
    def normalized(cls, w1: float, w2: float, w3: float) -> Weights:
        """Rescale any non-negative triple onto the simplex."""
        s = w1 + w2 + w3
        if s <= 0:
            raise ConfigError("weights must have a positive sum")
        a, b = w1 / s, w2 / s
        return cls(a, b, 1.0 - a - b)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)


@dataclass(frozen=True)
class ValidationReport:
    pass_id: str
    reasons: tuple[str, ...] = field(default_factory=tuple)

    @property
    def admissible(self) -> bool:
        return not self.reasons


def validate_pass(
    p: PassEvent, pitch: Pitch, tolerance: float = OUT_OF_BOUNDS_TOLERANCE
) -> ValidationReport:
    """Classify a pass as admissible or not, listing every violation."""
    reasons: list[str] = []
    n = p.snapshot.n
    if n < 1:
        reasons.append("empty defense")
    elif n > MAX_OUTFIELD_DEFENDERS:
        reasons.append(f"too many defenders ({n})")
    if not pitch.contains(p.start, tolerance):
        reasons.append("start out of bounds")
    if not pitch.contains(p.end, tolerance):
        reasons.append("end out of bounds")
    for j, d in enumerate(p.snapshot.defenders):
        if not pitch.contains(d, tolerance):
            reasons.append(f"defender {j} out of bounds")
    if p.passer_id == p.receiver_id:
        reasons.append("passer equals receiver")
    coords = [p.start.x, p.start.y, p.end.x, p.end.y, p.t]
    if not all(math.isfinite(c) for c in coords):
        reasons.append("non-finite coordinate or time")
    return ValidationReport(p.pass_id, tuple(reasons))
