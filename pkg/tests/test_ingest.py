import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from structpass.ingest import (
    FrameIndex,
    MatchFormatError,
    MatchMeta,
    RawEvent,
    SyncError,
    TrackingFrame,
    defending_team,
    extract_passes,
    ingest_match,
    smooth_tracking,
    sync_event_to_frame,
)
from structpass.types import Pitch, validate_pass

ROSTER = {
    **{f"H{k}": {"team_id": "H", "role": "goalkeeper" if k == 1 else "outfield"} for k in range(1, 12)},
    **{f"A{k}": {"team_id": "A", "role": "goalkeeper" if k == 1 else "outfield"} for k in range(1, 12)},
}
META = {
    "match_id": "m1",
    "pitch": {"length": 105.0, "width": 68.0},
    "frame_rate": 29.97,
    "home_team_id": "H",
    "away_team_id": "A",
    "home_attacks_positive_y": {"1": True, "2": False},
    "roster": ROSTER,
}


def meta_obj(**kw):
    return MatchMeta.from_dict({**META, **kw})


def frame(fid, t, players, period=1):
    return TrackingFrame(fid, t, {k: tuple(v) for k, v in players.items()}, None, period)


def full_frame(fid, t, period=1):
    players = {f"A{k}": (6.0 * k, 60.0) for k in range(2, 12)}
    players["A1"] = (34.0, 103.0)
    players.update({f"H{k}": (6.0 * k, 30.0) for k in range(2, 12)})
    players["H1"] = (34.0, 2.0)
    return frame(fid, t, players, period)


def ev(eid, t, **kw):
    d = {"event_id": eid, "type": "pass", "t": t, "actor_id": "H5", "team_id": "H",
         "start": [30, 40], "end": [35, 55], "success": True, "receiver_id": "H6"}
    d.update(kw)
    return RawEvent.from_dict(d)


# ------------------------------------------------------------- smoothing


def test_window_one_is_identity():
    fr = [frame(i, i / 30, {"a": (i * 1.5, 2.0)}) for i in range(6)]
    assert smooth_tracking(fr, 1) == fr


def test_constant_positions_unchanged():
    fr = [frame(i, i / 30, {"a": (12.345678901, 3.3)}) for i in range(20)]
    assert smooth_tracking(fr, 7) == fr


def test_hand_mean():
    fr = [frame(i, i / 30, {"a": (3.0 * i, 0.0)}) for i in range(3)]
    out = smooth_tracking(fr, 3)
    assert out[1].players["a"] == (3.0, 0.0)
    # shrinking window keeps the end frames as-is
    assert out[0].players["a"] == (0.0, 0.0)


def test_smoothing_preserves_frames_and_identity():
    fr = [frame(i, i / 30, {"a": (i % 3, i % 5), "b": (1, 1)}) for i in range(30)]
    out = smooth_tracking(fr, 5)
    assert len(out) == len(fr)
    assert [(f.frame_id, f.t, set(f.players)) for f in out] == [(f.frame_id, f.t, set(f.players)) for f in fr]


def test_smoothing_does_not_cross_gaps():
    fr = [frame(0, 0.0, {"a": (0.0, 0.0)}), frame(1, 1 / 30, {"a": (0.0, 0.0)}), frame(2, 5.0, {"a": (9.0, 9.0)})]
    assert smooth_tracking(fr, 3)[1].players["a"] == (0.0, 0.0)


def test_even_window_rejected_and_empty_ok():
    with pytest.raises(ValueError):
        smooth_tracking([frame(0, 0, {})], 4)
    assert smooth_tracking([], 7) == []


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=40), st.sampled_from([1, 3, 5, 7]))
def test_linear_track_is_fixed_point_away_from_gaps(vals, w):
    fr = [frame(i, i / 30, {"a": (2.0 * i, v)}) for i, v in enumerate(vals)]
    out = smooth_tracking(fr, w)
    for i, f in enumerate(out):
        assert f.players["a"][0] == pytest.approx(2.0 * i, abs=1e-9)


# -------------------------------------------------------------- sync


def test_sync_examples():
    frames = [frame(0, 10.0, {}), frame(1, 10.033, {}), frame(2, 10.066, {})]
    assert sync_event_to_frame(ev("e", 10.033), frames) == 1
    assert sync_event_to_frame(ev("e", 10.25), [frame(0, 10.0, {}), frame(1, 10.5, {})]) == 0
    assert sync_event_to_frame(ev("e", 10.02), frames) == 1


def test_sync_failure_beyond_half_second():
    with pytest.raises(SyncError):
        FrameIndex([frame(0, 10.0, {})]).nearest(10.6)


# ---------------------------------------------------------- extraction


def test_defending_team():
    m = meta_obj()
    assert defending_team(ev("e", 1, team_id="H"), m) == "A"
    assert defending_team(ev("e", 1, team_id="A", actor_id="A5"), m) == "H"
    with pytest.raises((KeyError, ValueError)):
        defending_team(ev("e", 1, team_id="X"), m)


def test_open_play_pass_full_frame():
    m = meta_obj()
    out = extract_passes([ev("e1", 1.0)], [full_frame(0, 1.0)], m)
    assert len(out) == 1
    p = out[0]
    assert p.snapshot.n == 10  # keeper excluded
    assert p.pass_id == "m1:e1" and p.receiver_id == "H6"
    assert validate_pass(p, m.pitch).admissible


@pytest.mark.parametrize("sp", ["corner", "throw_in", "free_kick", "goal_kick", "kick_off", "penalty"])
def test_set_pieces_excluded(sp):
    assert extract_passes([ev("e1", 1.0, set_piece=sp)], [full_frame(0, 1.0)], meta_obj()) == []


def test_goal_kicks_optional():
    out = extract_passes([ev("e1", 1.0, set_piece="goal_kick")], [full_frame(0, 1.0)], meta_obj(),
                         include_goal_kicks=True)
    assert len(out) == 1


def test_failed_pass_excluded():
    assert extract_passes([ev("e1", 1.0, success=False)], [full_frame(0, 1.0)], meta_obj()) == []


def test_flip_in_second_half():
    m = meta_obj()
    # home attacks -y in period 2: provider (30, 40) -> canonical (38, 65)
    p = extract_passes([ev("e1", 1.0, period=2)], [full_frame(0, 1.0, period=2)], m)[0]
    assert (p.start.x, p.start.y) == (38.0, 65.0)
    assert (p.end.x, p.end.y) == (33.0, 50.0)
    assert all(d.y == 105.0 - 60.0 for d in p.snapshot.defenders)


def test_direction_defaults_alternate():
    m = meta_obj(home_attacks_positive_y=None)
    assert m.attacks_up("H", 1) and not m.attacks_up("H", 2) and m.attacks_up("H", 3)
    assert not m.attacks_up("A", 1)


def test_receiver_fallback_and_drops():
    m = meta_obj()
    e1 = ev("e1", 1.0, receiver_id=None)
    e2 = ev("e2", 2.0, actor_id="H7", type="carry", start=[35, 55], end=[36, 60])
    assert extract_passes([e1, e2], [full_frame(0, 1.0)], m)[0].receiver_id == "H7"
    from structpass.ingest import IngestReport
    rep = IngestReport("m1")
    e3 = ev("e3", 1.0, receiver_id=None)
    e4 = ev("e4", 2.0, actor_id="A7", team_id="A", type="interception")
    assert extract_passes([e3, e4], [full_frame(0, 1.0)], m, rep) == []
    assert rep.drops["unresolvable receiver"] == 1


def test_missing_defenders_dropped():
    from structpass.ingest import IngestReport
    rep = IngestReport("m1")
    fr = frame(0, 1.0, {"A1": (34, 103), "H5": (30, 40)})
    assert extract_passes([ev("e1", 1.0)], [fr], meta_obj(), rep) == []
    assert rep.drops["empty defense"] == 1


def test_sync_failure_dropped():
    from structpass.ingest import IngestReport
    rep = IngestReport("m1")
    assert extract_passes([ev("e1", 5.0)], [full_frame(0, 1.0)], meta_obj(), rep) == []
    assert rep.drops["synchronization failure"] == 1


# ------------------------------------------------------------- files


def write_match(d: Path, events, frames, meta=META):
    d.mkdir(parents=True, exist_ok=True)
    (d / "meta.json").write_text(json.dumps(meta))
    (d / "events.jsonl").write_text("".join(json.dumps(e) + "\n" for e in events))
    (d / "tracking.jsonl").write_text("".join(json.dumps(f) + "\n" for f in frames))


def frame_dict(f):
    return {"frame_id": f.frame_id, "t": f.t, "period": f.period,
            "players": {k: list(v) for k, v in f.players.items()}}


def test_ingest_match_files(tmp_path):
    e = {"event_id": "e1", "type": "pass", "t": 1.0, "period": 1, "actor_id": "H5", "team_id": "H",
         "start": [30, 40], "end": [35, 55], "success": True, "receiver_id": "H6", "extra": "ignored"}
    write_match(tmp_path / "m1", [e], [frame_dict(full_frame(i, 1.0 + (i - 3) / 29.97)) for i in range(7)])
    res = ingest_match(tmp_path / "m1")
    assert len(res.passes) == 1
    assert res.report.n_passes == 1


def test_missing_tracking_names_file(tmp_path):
    write_match(tmp_path / "m1", [], [])
    (tmp_path / "m1" / "tracking.jsonl").unlink()
    with pytest.raises(MatchFormatError, match="tracking.jsonl"):
        ingest_match(tmp_path / "m1")


def test_bad_records_are_reported(tmp_path):
    write_match(tmp_path / "m1", [{"event_id": "x"}], [frame_dict(full_frame(0, 1.0))])
    res = ingest_match(tmp_path / "m1")
    assert res.report.record_errors and "events.jsonl:1" in res.report.record_errors[0]


def test_pitch_from_meta():
    assert meta_obj(pitch={"length": 100.0, "width": 64.0}).pitch == Pitch(100.0, 64.0)
