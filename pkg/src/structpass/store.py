"""On-disk pass store written by ``ingest`` and read by ``analyze``/``score``.

Layout of a store directory::

    passes.jsonl         one PassEvent per line (canonical frame)
    timeline.jsonl       every event of every match, canonical per actor team
    matches.jsonl        match id, pitch and team ids
    ingest_report.json   counts and drop reasons per match
"""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .ingest import MatchResult, TimelineEvent
from .types import PassEvent, Pitch

STORE_FILES = ("passes.jsonl", "timeline.jsonl", "matches.jsonl")


@dataclass
class MatchInfo:
    match_id: str
    pitch: Pitch
    home_team_id: str
    away_team_id: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "match_id": self.match_id,
            "pitch": self.pitch.to_dict(),
            "home_team_id": self.home_team_id,
            "away_team_id": self.away_team_id,
        }


@dataclass
class PassStore:
    passes: list[PassEvent]
    timeline: dict[str, list[TimelineEvent]] = field(default_factory=dict)
    matches: dict[str, MatchInfo] = field(default_factory=dict)

    def pitch_for(self, match_id: str) -> Pitch:
        info = self.matches.get(match_id)
        return info.pitch if info else Pitch()


def _dumps(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _write_jsonl(path: Path, rows: Iterable[dict[str, Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(_dumps(row) + "\n")


def _read_jsonl(path: Path) -> list[dict[str, Any]]:
    with path.open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_store(out_dir: str | Path, results: Sequence[MatchResult]) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = sorted(results, key=lambda r: r.meta.match_id)
    _write_jsonl(out / "passes.jsonl", (p.to_dict() for r in results for p in r.passes))
    _write_jsonl(out / "timeline.jsonl", (e.to_dict() for r in results for e in r.timeline))
    _write_jsonl(
        out / "matches.jsonl",
        (
            MatchInfo(r.meta.match_id, r.meta.pitch, r.meta.home_team_id, r.meta.away_team_id).to_dict()
            for r in results
        ),
    )
    report = {
        "n_matches": len(results),
        "n_passes": sum(len(r.passes) for r in results),
        "matches": [r.report.to_dict() for r in results],
    }
    (out / "ingest_report.json").write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    return out


def read_store(store_dir: str | Path) -> PassStore:
    d = Path(store_dir)
    missing = [name for name in STORE_FILES if not (d / name).is_file()]
    if missing:
        raise FileNotFoundError(f"{d}: pass store is missing {', '.join(missing)}")
    passes = [PassEvent.from_dict(row) for row in _read_jsonl(d / "passes.jsonl")]
    timeline: dict[str, list[TimelineEvent]] = defaultdict(list)
    for row in _read_jsonl(d / "timeline.jsonl"):
        e = TimelineEvent.from_dict(row)
        timeline[e.match_id].append(e)
    matches = {}
    for row in _read_jsonl(d / "matches.jsonl"):
        matches[row["match_id"]] = MatchInfo(
            row["match_id"], Pitch.from_dict(row["pitch"]), row["home_team_id"], row["away_team_id"]
        )
    return PassStore(passes, dict(timeline), matches)


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def store_hash(store_dir: str | Path) -> dict[str, str]:
    d = Path(store_dir)
    return {name: file_sha256(d / name) for name in STORE_FILES}
