"""Corpus-level z-scoring of the raw metrics and the Tactical Impact Value."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .types import StructuralFeatures, Weights

METRICS = ("lbs", "sgm", "sdi")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class NormStats:
    mu_lbs: float
    mu_sgm: float
    mu_sdi: float
    sd_lbs: float
    sd_sgm: float
    sd_sdi: float
    n_fit: int

    @property
    def mu(self) -> tuple[float, float, float]:
        return (self.mu_lbs, self.mu_sgm, self.mu_sdi)

    @property
    def sd(self) -> tuple[float, float, float]:
        return (self.sd_lbs, self.sd_sgm, self.sd_sdi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mu": {"lbs": self.mu_lbs, "sgm": self.mu_sgm, "sdi": self.mu_sdi},
            "sd": {"lbs": self.sd_lbs, "sgm": self.sd_sgm, "sdi": self.sd_sdi},
            "n_fit": self.n_fit,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> NormStats:
        mu, sd = d["mu"], d["sd"]
        return cls(
            float(mu["lbs"]), float(mu["sgm"]), float(mu["sdi"]),
            float(sd["lbs"]), float(sd["sgm"]), float(sd["sdi"]),
            int(d["n_fit"]),
        )


def raw_matrix(features: Sequence[StructuralFeatures]) -> np.ndarray:
    return np.array([f.raw for f in features], dtype=float).reshape(-1, 3)


def fit_norm_stats(features: Sequence[StructuralFeatures]) -> NormStats:
    """Population mean and standard deviation (divisor n) of each metric."""
    if len(features) < 2:
        raise FitError(f"need at least 2 passes to fit normalization, got {len(features)}")
    m = raw_matrix(features)
    mu = m.mean(axis=0)
    # two-pass: centre first, then average squared deviations
    sd = np.sqrt(((m - mu) ** 2).mean(axis=0))
    # a constant column leaves rounding residue in the mean; snap it to sd = 0
    # so every z-score is exactly 0 instead of +-1
    flat = sd <= 4 * np.finfo(float).eps * np.abs(m).max(axis=0)
    mu = np.where(flat, m[0], mu)
    sd = np.where(flat, 0.0, sd)
    return NormStats(*(float(v) for v in mu), *(float(v) for v in sd), n_fit=len(features))


def _z(value: float, mu: float, sd: float) -> float:
    if sd == 0:
        return 0.0
    return (value - mu) / sd


def tactical_impact_value(f: StructuralFeatures, w: Weights) -> float:
    z_lbs, z_sgm, z_sdi = f.z
    return w.w1 * z_lbs + w.w2 * z_sgm + w.w3 * z_sdi


def normalize(
    f: StructuralFeatures, stats: NormStats, weights: Weights | None = None
) -> StructuralFeatures:
    """Attach z-scores and, with ``weights`` (equal by default), the TIV."""
    z = [_z(v, mu, sd) for v, mu, sd in zip(f.raw, stats.mu, stats.sd)]
    out = replace(f, z_lbs=z[0], z_sgm=z[1], z_sdi=z[2])
    return replace(out, tiv=tactical_impact_value(out, weights or Weights()))


def normalize_all(
    features: Sequence[StructuralFeatures], stats: NormStats, weights: Weights | None = None
) -> list[StructuralFeatures]:
    w = weights or Weights()
    return [normalize(f, stats, w) for f in features]


def z_matrix(features: Sequence[StructuralFeatures]) -> np.ndarray:
    return np.array([f.z for f in features], dtype=float).reshape(-1, 3)
