"""Analysis parameters: defaults, JSON loading and validation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .aggregation import DEFAULT_GRID, DEFAULT_MIN_COUNT, DEFAULT_MIN_DUO_COUNT, DEFAULT_MIN_PASSES
from .clustering import DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_SEED, DEFAULT_TOL
from .metrics import DEFAULT_RHO_FLOOR, DEFAULT_SIGMA, DensityParams
from .outcomes import DEFAULT_QUANTILES, DEFAULT_WINDOW_S
from .types import ConfigError, Pitch, Weights


@dataclass(frozen=True)
class AnalysisConfig:
    sigma: float = DEFAULT_SIGMA
    rho_floor: float = DEFAULT_RHO_FLOOR
    weights: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    window_s: float = DEFAULT_WINDOW_S
    k: int = DEFAULT_K
    seed: int = DEFAULT_SEED
    restarts: int = 1
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    grid: tuple[int, int] = DEFAULT_GRID
    min_count: int = DEFAULT_MIN_COUNT
    min_passes: int = DEFAULT_MIN_PASSES
    min_duo_count: int = DEFAULT_MIN_DUO_COUNT
    quantiles: int = DEFAULT_QUANTILES
    pitch: dict[str, float] = field(default_factory=lambda: Pitch().to_dict())

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        if len(self.weights) != 3:
            raise ConfigError("weights must have exactly three entries")
        if len(self.grid) != 2:
            raise ConfigError("grid must be [nx, ny]")
        # constructing these validates them
        self.density_params
        self.weights_obj
        self.pitch_obj
        if not (math.isfinite(self.window_s) and self.window_s > 0):
            raise ConfigError(f"window_s must be positive, got {self.window_s}")
        if self.k != 4:
            raise ConfigError(f"archetype labelling needs k=4, got k={self.k}")
        for name in ("restarts", "max_iter", "quantiles"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.quantiles < 2:
            raise ConfigError("quantiles must be >= 2")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if min(self.grid) < 1:
            raise ConfigError("grid needs at least one cell per axis")
        for name in ("min_count", "min_passes", "min_duo_count"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def density_params(self) -> DensityParams:
        return DensityParams(self.sigma, self.rho_floor)

    @property
    def weights_obj(self) -> Weights:
        return Weights(*self.weights)

    @property
    def pitch_obj(self) -> Pitch:
        return Pitch.from_dict(self.pitch)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["weights"] = list(self.weights)
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AnalysisConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides: Any) -> AnalysisConfig:
        """Defaults, then the JSON file, then non-None ``overrides``."""
        d: dict[str, Any] = {}
        if path is not None:
            try:
                d = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            if not isinstance(d, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)
