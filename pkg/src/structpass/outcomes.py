"""Post-pass outcome flags and outcome rates by archetype / TIV quantile."""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .clustering import ARCHETYPE_ORDER
from .ingest import TimelineEvent
from .types import PassEvent, Pitch, Point2D

DEFAULT_WINDOW_S = 10.0
DEFAULT_QUANTILES = 5
OUTCOMES = ("final_third_entry", "box_entry", "shot_in_window", "goal_in_window")


@dataclass(frozen=True)
class OutcomeRecord:
    pass_id: str
    final_third_entry: bool
    box_entry: bool
    shot_in_window: bool
    goal_in_window: bool
    window_s: float

    def flags(self) -> tuple[bool, bool, bool, bool]:
        return (self.final_third_entry, self.box_entry, self.shot_in_window, self.goal_in_window)


def loses_possession(e: TimelineEvent, team_id: str) -> bool:
    """Opponent completes an on-ball action or is awarded a restart."""
    return e.team_id != team_id and (e.success or e.set_piece is not None)


def _entered(path: Sequence[Point2D], inside) -> bool:
    # the pass's own end point counts; afterwards only outside->inside crossings do
    if inside(path[0]):
        return True
    return any(not inside(a) and inside(b) for a, b in zip(path, path[1:]))


def annotate_pass(
    p: PassEvent,
    following: Iterable[TimelineEvent],
    pitch: Pitch,
    window_s: float = DEFAULT_WINDOW_S,
) -> OutcomeRecord:
    """Outcome flags for ``p`` from the time-ordered events after it."""
    path = [p.end]
    shot = goal = False
    for e in following:
        if e.period != p.period or e.t > p.t + window_s:
            break
        if loses_possession(e, p.team_id):
            break
        if e.team_id != p.team_id:
            continue
        path.extend(q for q in (e.start, e.end) if q is not None)
        if e.type == "shot":
            shot = True
            goal = goal or e.success
    return OutcomeRecord(
        pass_id=p.pass_id,
        final_third_entry=_entered(path, pitch.in_final_third),
        box_entry=_entered(path, pitch.in_box),
        shot_in_window=shot,
        goal_in_window=goal,
        window_s=window_s,
    )


def annotate_outcomes(
    passes: Sequence[PassEvent],
    events: Sequence[TimelineEvent],
    pitch: Pitch,
    window_s: float = DEFAULT_WINDOW_S,
) -> list[OutcomeRecord]:
    """Annotate passes of one match against that match's canonical timeline.

    Events are assumed ordered by (period, t). A pass is located in the
    timeline by its event id (the part of ``pass_id`` after the last colon);
    failing that, scanning starts at the first event strictly after it.
    """
    position = {e.event_id: i for i, e in enumerate(events)}
    keys = [(e.period, e.t) for e in events]
    out = []
    for p in passes:
        eid = p.pass_id.rsplit(":", 1)[-1]
        if eid in position:
            start = position[eid] + 1
        else:
            start = bisect.bisect_right(keys, (p.period, p.t))
        out.append(annotate_pass(p, events[start:], pitch, window_s))
    return out


@dataclass(frozen=True)
class RateRow:
    key: Any
    count: int
    rates: dict[str, float | None]


def _rates(records: Sequence[OutcomeRecord]) -> dict[str, float | None]:
    if not records:
        return {name: None for name in OUTCOMES}
    flags = np.array([r.flags() for r in records], dtype=float)
    return {name: float(v) for name, v in zip(OUTCOMES, flags.mean(axis=0))}


def outcome_rates_by_group(
    records: Sequence[OutcomeRecord], groups: Sequence[Hashable], order: Sequence[Hashable]
) -> list[RateRow]:
    if len(records) != len(groups):
        raise ValueError("every record needs exactly one group")
    buckets: dict[Hashable, list[OutcomeRecord]] = defaultdict(list)
    for r, g in zip(records, groups):
        buckets[g].append(r)
    keys = list(order) + sorted((k for k in buckets if k not in order), key=str)
    return [RateRow(k, len(buckets.get(k, [])), _rates(buckets.get(k, []))) for k in keys]


def outcome_rates_by_archetype(records, assignments) -> list[RateRow]:
    return outcome_rates_by_group(records, assignments, ARCHETYPE_ORDER)


def quantile_bins(values: Sequence[float], q: int) -> np.ndarray:
    """Equal-population bin index per value, 0 = lowest.

    Values are ranked (stable) and cut into ``q`` runs of near-equal size;
    a value repeated across a cut goes to the lowest bin it reaches.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if q < 2:
        raise ValueError("need at least 2 quantile bins")
    if q > n:
        raise ValueError(f"{q} quantile bins for only {n} passes")
    order = np.argsort(v, kind="stable")
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(n)
    bins = ranks * q // n
    sorted_vals = v[order]
    first_rank = np.searchsorted(sorted_vals, v, side="left")
    return np.minimum(bins, first_rank * q // n)


def outcome_rates_by_tiv_quantile(
    records: Sequence[OutcomeRecord], tiv_values: Sequence[float], q: int = DEFAULT_QUANTILES
) -> list[RateRow]:
    bins = quantile_bins(tiv_values, q)
    return outcome_rates_by_group(records, [int(b) for b in bins], list(range(q)))
