"""Canonical match files -> smoothed tracking -> open-play passes.

A match directory holds ``meta.json``, ``events.jsonl`` and
``tracking.jsonl`` (layout documented in ``docs/format.md``). Provider
coordinates are metres with the same axes as the canonical frame; a pass is
mapped into its team's attacking frame by a 180 degree rotation whenever
that team attacks towards ``y = 0`` in the pass's period.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .types import (
    OUT_OF_BOUNDS_TOLERANCE,
    DefensiveSnapshot,
    PassEvent,
    Pitch,
    Point2D,
    validate_pass,
)

log = logging.getLogger(__name__)

DEFAULT_FRAME_RATE = 29.97
DEFAULT_SMOOTHING_WINDOW = 7
SYNC_THRESHOLD_S = 0.5
RECEIVER_LOOKAHEAD_S = 5.0
# tracking gaps longer than this split the sequence for smoothing
SEGMENT_GAP_S = 0.5

SET_PIECES = frozenset({"corner", "throw_in", "free_kick", "goal_kick", "kick_off", "penalty"})
GOALKEEPER = "goalkeeper"


class MatchFormatError(Exception):
    """A match directory cannot be read; the message names the file."""


class SyncError(Exception):
    pass


@dataclass(frozen=True)
class RawEvent:
    event_id: str
    type: str
    t: float
    actor_id: str
    team_id: str
    start_xy: tuple[float, float] | None
    end_xy: tuple[float, float] | None
    success: bool
    set_piece: str | None = None
    period: int = 1
    receiver_id: str | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RawEvent:
        def xy(v: Any) -> tuple[float, float] | None:
            return None if v is None else (float(v[0]), float(v[1]))

        sp = d.get("set_piece")
        if sp is not None and sp not in SET_PIECES:
            raise ValueError(f"unknown set_piece {sp!r}")
        rid = d.get("receiver_id")
        return cls(
            event_id=str(d["event_id"]),
            type=str(d["type"]),
            t=float(d["t"]),
            actor_id=str(d["actor_id"]),
            team_id=str(d["team_id"]),
            start_xy=xy(d.get("start")),
            end_xy=xy(d.get("end")),
            success=bool(d["success"]),
            set_piece=sp,
            period=int(d.get("period", 1)),
            receiver_id=None if rid is None else str(rid),
        )


@dataclass(frozen=True)
class TrackingFrame:
    frame_id: int
    t: float
    players: dict[str, tuple[float, float]]
    ball: tuple[float, float] | None = None
    period: int = 1

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TrackingFrame:
        ball = d.get("ball")
        return cls(
            frame_id=int(d["frame_id"]),
            t=float(d["t"]),
            period=int(d.get("period", 1)),
            players={str(k): (float(v[0]), float(v[1])) for k, v in d["players"].items()},
            ball=None if ball is None else (float(ball[0]), float(ball[1])),
        )


@dataclass(frozen=True)
class RosterEntry:
    team_id: str
    role: str
    jersey: int | None = None


@dataclass(frozen=True)
class MatchMeta:
    match_id: str
    pitch: Pitch
    frame_rate: float
    home_team_id: str
    away_team_id: str
    roster: dict[str, RosterEntry]
    # period -> whether the home team attacks towards +y
    home_attacks_positive_y: dict[int, bool] = field(default_factory=dict)

    def home_attacks_up(self, period: int) -> bool:
        if period in self.home_attacks_positive_y:
            return self.home_attacks_positive_y[period]
        first = self.home_attacks_positive_y.get(1, True)
        return first if period % 2 == 1 else not first

    def attacks_up(self, team_id: str, period: int) -> bool:
        home_up = self.home_attacks_up(period)
        if team_id == self.home_team_id:
            return home_up
        if team_id == self.away_team_id:
            return not home_up
        raise KeyError(f"unknown team id {team_id!r}")

    def to_canonical(self, xy: Sequence[float], team_id: str, period: int) -> Point2D:
        if self.attacks_up(team_id, period):
            return Point2D(float(xy[0]), float(xy[1]))
        return Point2D(self.pitch.width - xy[0], self.pitch.length - xy[1])

    @classmethod
    def from_dict(cls, d: dict[str, Any], match_id: str | None = None) -> MatchMeta:
        roster = {
            str(pid): RosterEntry(str(r["team_id"]), str(r.get("role", "")).lower(), r.get("jersey"))
            for pid, r in d.get("roster", {}).items()
        }
        dirs = {int(k): bool(v) for k, v in (d.get("home_attacks_positive_y") or {}).items()}
        return cls(
            match_id=str(d.get("match_id", match_id or "")),
            pitch=Pitch.from_dict(d.get("pitch")),
            frame_rate=float(d.get("frame_rate", DEFAULT_FRAME_RATE)),
            home_team_id=str(d["home_team_id"]),
            away_team_id=str(d["away_team_id"]),
            roster=roster,
            home_attacks_positive_y=dirs,
        )


def defending_team(e: RawEvent, meta: MatchMeta) -> str:
    if e.team_id == meta.home_team_id:
        return meta.away_team_id
    if e.team_id == meta.away_team_id:
        return meta.home_team_id
    raise KeyError(f"event {e.event_id}: unknown team id {e.team_id!r}")


@dataclass
class IngestReport:
    match_id: str
    n_events: int = 0
    n_frames: int = 0
    n_pass_candidates: int = 0
    n_passes: int = 0
    drops: Counter = field(default_factory=Counter)
    record_errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    irregular_gaps: int = 0

    def drop(self, event_id: str, reason: str) -> None:
        self.drops[reason] += 1
        log.info("match %s: dropped pass %s (%s)", self.match_id, event_id, reason)

    def to_dict(self) -> dict[str, Any]:
        return {
            "match_id": self.match_id,
            "n_events": self.n_events,
            "n_frames": self.n_frames,
            "n_pass_candidates": self.n_pass_candidates,
            "n_passes": self.n_passes,
            "drops": dict(sorted(self.drops.items())),
            "record_errors": self.record_errors,
            "warnings": self.warnings,
            "irregular_gaps": self.irregular_gaps,
        }


# ---------------------------------------------------------------- reading


def _read_jsonl(path: Path, parse, report: IngestReport | None) -> list:
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse(json.loads(line)))
            except (ValueError, KeyError, TypeError, IndexError) as exc:
                msg = f"{path.name}:{lineno}: {exc!r}"
                if report is None:
                    raise MatchFormatError(msg) from exc
                report.record_errors.append(msg)
    return out


def load_meta(match_dir: Path) -> MatchMeta:
    path = match_dir / "meta.json"
    if not path.is_file():
        raise MatchFormatError(f"{path}: missing meta.json")
    try:
        meta = MatchMeta.from_dict(json.loads(path.read_text(encoding="utf-8")), match_dir.name)
    except (ValueError, KeyError, TypeError) as exc:
        raise MatchFormatError(f"{path}: {exc!r}") from exc
    if meta.home_team_id == meta.away_team_id:
        raise MatchFormatError(f"{path}: home and away team ids coincide")
    return meta


def load_events(match_dir: Path, report: IngestReport | None = None) -> list[RawEvent]:
    path = match_dir / "events.jsonl"
    if not path.is_file():
        raise MatchFormatError(f"{path}: missing events.jsonl")
    events = _read_jsonl(path, RawEvent.from_dict, report)
    # stable: equal timestamps keep file order
    return sorted(events, key=lambda e: (e.period, e.t))


def load_tracking(match_dir: Path, report: IngestReport | None = None) -> list[TrackingFrame]:
    path = match_dir / "tracking.jsonl"
    if not path.is_file():
        raise MatchFormatError(f"{path}: missing tracking.jsonl")
    frames = sorted(_read_jsonl(path, TrackingFrame.from_dict, report), key=lambda f: (f.period, f.t))
    for a, b in zip(frames, frames[1:]):
        if a.period == b.period and not b.t > a.t:
            raise MatchFormatError(f"{path}: duplicate frame timestamp {b.t} in period {b.period}")
    return frames


def count_irregular_gaps(frames: Sequence[TrackingFrame], frame_rate: float) -> int:
    nominal = 1.0 / frame_rate
    return sum(
        1
        for a, b in zip(frames, frames[1:])
        if a.period == b.period and abs((b.t - a.t) - nominal) > 0.2 * nominal
    )


# -------------------------------------------------------------- smoothing


def _segments(frames: Sequence[TrackingFrame]) -> list[tuple[int, int]]:
    bounds = []
    start = 0
    for i in range(1, len(frames)):
        a, b = frames[i - 1], frames[i]
        if a.period != b.period or b.t - a.t > SEGMENT_GAP_S:
            bounds.append((start, i))
            start = i
    if frames:
        bounds.append((start, len(frames)))
    return bounds


def _smooth_segment(frames: Sequence[TrackingFrame], window: int) -> list[TrackingFrame]:
    ids = sorted({pid for f in frames for pid in f.players})
    col = {pid: j for j, pid in enumerate(ids)}
    n, m = len(frames), len(ids)
    pos = np.zeros((n, m, 2))
    present = np.zeros((n, m), dtype=bool)
    for i, f in enumerate(frames):
        for pid, xy in f.players.items():
            pos[i, col[pid]] = xy
            present[i, col[pid]] = True

    idx = np.arange(n)
    half = np.minimum(window // 2, np.minimum(idx, n - 1 - idx))
    # average deviations from the centre frame so constant tracks stay bit-exact
    acc = np.zeros_like(pos)
    cnt = np.zeros((n, m))
    for off in range(-(window // 2), window // 2 + 1):
        src = idx + off
        ok = (np.abs(off) <= half) & (src >= 0) & (src < n)
        src = np.clip(src, 0, n - 1)
        use = ok[:, None] & present[src] & present
        dev = pos[src] - pos
        acc += np.where(use[..., None], dev, 0.0)
        cnt += use
    with np.errstate(invalid="ignore", divide="ignore"):
        smoothed = pos + acc / np.maximum(cnt, 1)[..., None]

    out = []
    for i, f in enumerate(frames):
        players = {
            pid: (float(smoothed[i, col[pid], 0]), float(smoothed[i, col[pid], 1]))
            for pid in f.players
        }
        out.append(TrackingFrame(f.frame_id, f.t, players, f.ball, f.period))
    return out


def smooth_tracking(frames: Sequence[TrackingFrame], window: int = DEFAULT_SMOOTHING_WINDOW) -> list[TrackingFrame]:
    """Centred moving average of every player track over ``window`` frames.

    The window shrinks symmetrically near the ends of each contiguous
    segment (a period change or a gap over half a second starts a new one).
    Frames in which a player is missing are skipped in that player's mean.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"smoothing window must be odd and >= 1, got {window}")
    if not frames:
        return []
    if window == 1:
        return list(frames)
    out: list[TrackingFrame] = []
    for s, e in _segments(frames):
        out.extend(_smooth_segment(frames[s:e], window))
    return out


# -------------------------------------------------------- synchronisation


class FrameIndex:
    """Per-period sorted frame timestamps for nearest-frame lookup."""

    def __init__(self, frames: Sequence[TrackingFrame]):
        self._by_period: dict[int, tuple[list[float], list[TrackingFrame]]] = {}
        for f in sorted(frames, key=lambda f: (f.period, f.t)):
            ts, fs = self._by_period.setdefault(f.period, ([], []))
            ts.append(f.t)
            fs.append(f)

    def nearest(self, t: float, period: int = 1) -> TrackingFrame:
        if period not in self._by_period:
            raise SyncError(f"no tracking frames in period {period}")
        ts, fs = self._by_period[period]
        i = bisect.bisect_left(ts, t)
        if i == 0:
            best = 0
        elif i == len(ts):
            best = len(ts) - 1
        else:
            # ties go to the earlier frame
            best = i - 1 if t - ts[i - 1] <= ts[i] - t else i
        f = fs[best]
        if abs(f.t - t) > SYNC_THRESHOLD_S:
            raise SyncError(f"nearest frame is {abs(f.t - t):.3f}s from event time {t}")
        return f


def sync_event_to_frame(e: RawEvent, frames: Sequence[TrackingFrame] | FrameIndex) -> int:
    index = frames if isinstance(frames, FrameIndex) else FrameIndex(frames)
    return index.nearest(e.t, e.period).frame_id


# ------------------------------------------------------------- extraction


def is_open_play_pass(e: RawEvent, include_goal_kicks: bool = False) -> bool:
    if e.type != "pass" or not e.success:
        return False
    if e.set_piece is None:
        return True
    return include_goal_kicks and e.set_piece == "goal_kick"


def _resolve_receiver(
    i: int, events: Sequence[RawEvent], meta: MatchMeta
) -> str | None:
    e = events[i]

    def ok(pid: str | None) -> bool:
        entry = meta.roster.get(pid) if pid is not None else None
        return entry is not None and entry.team_id == e.team_id and pid != e.actor_id

    if e.receiver_id is not None:
        return e.receiver_id if ok(e.receiver_id) else None
    for nxt in events[i + 1:]:
        if nxt.period != e.period or nxt.t - e.t > RECEIVER_LOOKAHEAD_S:
            break
        if nxt.team_id != e.team_id:
            break
        if ok(nxt.actor_id):
            return nxt.actor_id
    return None


def _snapshot(frame: TrackingFrame, e: RawEvent, meta: MatchMeta, defending: str) -> DefensiveSnapshot:
    defenders = []
    for pid in sorted(frame.players):
        entry = meta.roster.get(pid)
        if entry is None or entry.team_id != defending or entry.role == GOALKEEPER:
            continue
        p = meta.to_canonical(frame.players[pid], e.team_id, e.period)
        # players clearly off the field are not part of the defensive shape
        if meta.pitch.contains(p, OUT_OF_BOUNDS_TOLERANCE):
            defenders.append(p)
    return DefensiveSnapshot(tuple(defenders), frame_id=frame.frame_id)


def extract_passes(
    events: Sequence[RawEvent],
    frames: Sequence[TrackingFrame] | FrameIndex,
    meta: MatchMeta,
    report: IngestReport | None = None,
    include_goal_kicks: bool = False,
) -> list[PassEvent]:
    """Successful open-play passes with their pass-time defensive snapshot."""
    report = report or IngestReport(meta.match_id)
    index = frames if isinstance(frames, FrameIndex) else FrameIndex(frames)
    events = sorted(events, key=lambda e: (e.period, e.t))
    out: list[PassEvent] = []
    for i, e in enumerate(events):
        if not is_open_play_pass(e, include_goal_kicks):
            continue
        report.n_pass_candidates += 1
        if e.start_xy is None or e.end_xy is None:
            report.drop(e.event_id, "missing location")
            continue
        passer = meta.roster.get(e.actor_id)
        if passer is None or passer.team_id != e.team_id:
            report.drop(e.event_id, "passer not on team")
            continue
        receiver = _resolve_receiver(i, events, meta)
        if receiver is None:
            report.drop(e.event_id, "unresolvable receiver")
            continue
        try:
            frame = index.nearest(e.t, e.period)
        except SyncError:
            report.drop(e.event_id, "synchronization failure")
            continue
        snap = _snapshot(frame, e, meta, defending_team(e, meta))
        if snap.n < 1:
            report.drop(e.event_id, "empty defense")
            continue
        p = PassEvent(
            pass_id=f"{meta.match_id}:{e.event_id}",
            match_id=meta.match_id,
            team_id=e.team_id,
            passer_id=e.actor_id,
            receiver_id=receiver,
            t=e.t,
            period=e.period,
            start=meta.to_canonical(e.start_xy, e.team_id, e.period),
            end=meta.to_canonical(e.end_xy, e.team_id, e.period),
            snapshot=snap,
        )
        verdict = validate_pass(p, meta.pitch)
        if not verdict.admissible:
            report.drop(e.event_id, verdict.reasons[0])
            continue
        out.append(p)
    report.n_passes += len(out)
    return out


# ---------------------------------------------------------------- timeline


@dataclass(frozen=True)
class TimelineEvent:
    """An event with locations in its own team's attacking frame."""

    match_id: str
    event_id: str
    type: str
    t: float
    period: int
    team_id: str
    actor_id: str
    start: Point2D | None
    end: Point2D | None
    success: bool
    set_piece: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "match_id": self.match_id,
            "event_id": self.event_id,
            "type": self.type,
            "t": self.t,
            "period": self.period,
            "team_id": self.team_id,
            "actor_id": self.actor_id,
            "start": None if self.start is None else self.start.as_list(),
            "end": None if self.end is None else self.end.as_list(),
            "success": self.success,
            "set_piece": self.set_piece,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TimelineEvent:
        return cls(
            match_id=str(d["match_id"]),
            event_id=str(d["event_id"]),
            type=str(d["type"]),
            t=float(d["t"]),
            period=int(d["period"]),
            team_id=str(d["team_id"]),
            actor_id=str(d["actor_id"]),
            start=None if d.get("start") is None else Point2D.of(d["start"]),
            end=None if d.get("end") is None else Point2D.of(d["end"]),
            success=bool(d["success"]),
            set_piece=d.get("set_piece"),
        )


def canonical_timeline(events: Iterable[RawEvent], meta: MatchMeta) -> list[TimelineEvent]:
    out = []
    for e in sorted(events, key=lambda e: (e.period, e.t)):
        if e.team_id not in (meta.home_team_id, meta.away_team_id):
            continue
        out.append(
            TimelineEvent(
                match_id=meta.match_id,
                event_id=e.event_id,
                type=e.type,
                t=e.t,
                period=e.period,
                team_id=e.team_id,
                actor_id=e.actor_id,
                start=None if e.start_xy is None else meta.to_canonical(e.start_xy, e.team_id, e.period),
                end=None if e.end_xy is None else meta.to_canonical(e.end_xy, e.team_id, e.period),
                success=e.success,
                set_piece=e.set_piece,
            )
        )
    return out


# ------------------------------------------------------------------ driver


@dataclass
class MatchResult:
    meta: MatchMeta
    passes: list[PassEvent]
    timeline: list[TimelineEvent]
    report: IngestReport


def _check_roster(meta: MatchMeta, report: IngestReport) -> None:
    keepers = Counter(r.team_id for r in meta.roster.values() if r.role == GOALKEEPER)
    for team in (meta.home_team_id, meta.away_team_id):
        if keepers[team] != 1:
            report.warnings.append(f"team {team} has {keepers[team]} goalkeepers in roster")


def ingest_match(
    match_dir: str | Path,
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
    include_goal_kicks: bool = False,
) -> MatchResult:
    match_dir = Path(match_dir)
    meta = load_meta(match_dir)
    report = IngestReport(meta.match_id)
    _check_roster(meta, report)
    events = load_events(match_dir, report)
    frames = load_tracking(match_dir, report)
    report.n_events = len(events)
    report.n_frames = len(frames)
    report.irregular_gaps = count_irregular_gaps(frames, meta.frame_rate)
    frames = smooth_tracking(frames, smoothing_window)
    passes = extract_passes(events, frames, meta, report, include_goal_kicks)
    return MatchResult(meta, passes, canonical_timeline(events, meta), report)


def find_match_dirs(root: str | Path) -> list[Path]:
    """Match directories under ``root`` (or ``root`` itself), sorted by name."""
    root = Path(root)
    if (root / "meta.json").is_file():
        return [root]
    if not root.is_dir():
        raise MatchFormatError(f"{root}: not a directory")
    return sorted(p for p in root.iterdir() if p.is_dir())
