"""Deterministic synthetic matches with known structural ground truth.

Every open-play pass is built for one intended archetype: a defensive block
is laid out from a template, candidate start/end points are proposed from
an intent-specific distribution, and a candidate is kept only when its
metrics fall in the intent's acceptance region. The metrics used for that
check (and written to ``ground_truth.jsonl``) come from the plain-Python
routines below, which share no code with :mod:`structpass.metrics`.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .clustering import ARCHETYPE_ORDER, Archetype
from .types import Pitch

MAX_ATTEMPTS = 5000
PASS_SPACING_S = 3.0
BURST_HALF = 2  # tracking frames either side of each event
FRAME_RATE = 29.97


class GenerationError(ValueError):
    pass


# Lines of the block as (depth from own goal line of the attacking team,
# player count, lateral spread), deepest-defending line first.
TEMPLATES: dict[str, list[tuple[float, int, float]]] = {
    "flat_back_four": [(80.0, 4, 40.0), (66.0, 4, 40.0), (52.0, 2, 20.0)],
    "two_lines_4_4": [(76.0, 4, 36.0), (63.0, 4, 36.0), (49.0, 2, 16.0)],
    "compact_block": [(72.0, 4, 30.0), (63.0, 4, 30.0), (54.0, 2, 14.0)],
    "stretched_block": [(86.0, 4, 48.0), (66.0, 4, 44.0), (44.0, 2, 24.0)],
}


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 0
    n_matches: int = 1
    defense_template: str = "flat_back_four"
    pass_mix: dict[Archetype, float] = field(
        default_factory=lambda: {a: 0.25 for a in ARCHETYPE_ORDER}
    )
    noise_sd: float = 0.0
    passes_per_match: int = 200
    n_defenders: int = 10
    sigma: float = 10.0
    rho_floor: float = 1e-6
    jitter_sd: float = 0.0

    def __post_init__(self) -> None:
        if self.defense_template not in TEMPLATES:
            raise GenerationError(f"unknown defense template {self.defense_template!r}")
        mix = {Archetype(k): float(v) for k, v in self.pass_mix.items()}
        object.__setattr__(self, "pass_mix", mix)
        if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
            raise GenerationError(f"pass_mix must be non-negative and sum to 1, got {mix}")
        if self.noise_sd < 0 or self.jitter_sd < 0:
            raise GenerationError("noise_sd and jitter_sd must be non-negative")
        if not 1 <= self.n_defenders <= 10:
            raise GenerationError("n_defenders must be in 1..10")
        if self.n_matches < 1 or self.passes_per_match < 1:
            raise GenerationError("need at least one match and one pass per match")
        if mix.get(Archetype.LINE_BREAKING, 0) > 0 and self.n_defenders < 3:
            raise GenerationError("line-breaking intent needs at least 3 defenders")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n_matches": self.n_matches,
            "defense_template": self.defense_template,
            "pass_mix": {a.value: self.pass_mix.get(a, 0.0) for a in ARCHETYPE_ORDER},
            "noise_sd": self.noise_sd,
            "passes_per_match": self.passes_per_match,
            "n_defenders": self.n_defenders,
            "sigma": self.sigma,
            "rho_floor": self.rho_floor,
            "jitter_sd": self.jitter_sd,
        }


# ------------------------------------------------------------------ oracle

Pt = tuple[float, float]


def oracle_lbs(start: Pt, end: Pt, defenders: list[Pt]) -> int:
    n = 0
    for _, y in defenders:
        if start[1] < y <= end[1]:
            n += 1
    return n


def oracle_space(x: Pt, defenders: list[Pt], sigma: float, rho_floor: float) -> float:
    rho = 0.0
    for dx, dy in defenders:
        rho += math.exp(-((x[0] - dx) ** 2 + (x[1] - dy) ** 2) / (2.0 * sigma * sigma))
    return 1.0 / max(rho, rho_floor)


def oracle_metrics(
    start: Pt, end: Pt, defenders: list[Pt], sigma: float, rho_floor: float
) -> tuple[int, float, float]:
    if start == end:
        return 0, 0.0, 0.0
    lbs = oracle_lbs(start, end, defenders)
    sgm = oracle_space(end, defenders, sigma, rho_floor) - oracle_space(start, defenders, sigma, rho_floor)
    cx = sum(d[0] for d in defenders) / len(defenders)
    cy = sum(d[1] for d in defenders) / len(defenders)
    sdi = math.hypot(end[0] - cx, end[1] - cy) - math.hypot(start[0] - cx, start[1] - cy)
    return lbs, sgm, sdi


# ------------------------------------------------------------- geometry


@dataclass
class Block:
    defenders: list[Pt]
    line_y: list[float]  # deepest first
    centre_x: float


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def _layout(spec: ScenarioSpec, rng: random.Random, pitch: Pitch) -> Block:
    shift_y = rng.uniform(-12.0, 4.0)
    centre_x = pitch.width / 2 + rng.uniform(-6.0, 6.0)
    defenders: list[Pt] = []
    line_y = []
    for depth, count, spread in TEMPLATES[spec.defense_template]:
        y = depth + shift_y
        line_y.append(y)
        for k in range(count):
            x = centre_x - spread / 2 + spread * k / max(count - 1, 1)
            defenders.append((x, y))
    defenders = defenders[: spec.n_defenders]
    if spec.noise_sd > 0:
        defenders = [
            (
                _clamp(x + rng.gauss(0, spec.noise_sd), 0.5, pitch.width - 0.5),
                _clamp(y + rng.gauss(0, spec.noise_sd), 0.5, pitch.length - 0.5),
            )
            for x, y in defenders
        ]
    return Block(defenders, line_y, centre_x)


def _clip(p: Pt, pitch: Pitch) -> Pt:
    return (_clamp(p[0], 0.5, pitch.width - 0.5), _clamp(p[1], 0.5, pitch.length - 0.5))


Proposal = Callable[[Block, random.Random, Pitch], tuple[Pt, Pt]]
Accept = Callable[[int, float, float], bool]


def _propose_circulatory(b: Block, rng, pitch):
    front = b.line_y[-1]
    s = (rng.uniform(14, pitch.width - 14), rng.uniform(front - 4, front + 6))
    e = (s[0] + rng.choice((-1, 1)) * rng.uniform(3, 9), s[1] - rng.uniform(0, 5))
    return s, e


def _centroid(b: Block) -> Pt:
    n = len(b.defenders)
    return (sum(d[0] for d in b.defenders) / n, sum(d[1] for d in b.defenders) / n)


def _propose_destabilising(b: Block, rng, pitch):
    # from the heart of the block back out to the most advanced defender
    cx, cy = _centroid(b)
    s = (cx + rng.uniform(-3, 3), cy + rng.uniform(-3, 3))
    fx, fy = min(b.defenders, key=lambda d: (d[1], rng.random()))
    away = math.atan2(fy - cy, fx - cx) + rng.uniform(-0.6, 0.6)
    r = rng.uniform(2, 7)
    e = (fx + r * math.cos(away), min(fy + r * math.sin(away), s[1]))
    return s, e


def _propose_line_breaking(b: Block, rng, pitch):
    back, mid, front = b.line_y[0], b.line_y[1], b.line_y[-1]
    s = (rng.uniform(16, pitch.width - 16), front - rng.uniform(4, 14))
    e = (s[0] + rng.uniform(-10, 10), rng.uniform(mid + 2, max(mid + 2.5, back - 2)))
    return s, e


def _propose_space_expanding(b: Block, rng, pitch, sigma: float = 10.0, rho_floor: float = 1e-6):
    # from tight to a defender, walk away (never forwards) until the target gain is reached
    d = rng.choice(b.defenders)
    ang = rng.uniform(0, 2 * math.pi)
    s = (d[0] + 2.0 * math.cos(ang), d[1] - abs(2.0 * math.sin(ang)))
    heading = rng.uniform(math.pi, 2 * math.pi)
    target = rng.uniform(4.2, 6.8)
    base = oracle_space(s, b.defenders, sigma, rho_floor)
    e = s
    r = 4.0
    while r <= 35.0:
        e = (s[0] + r * math.cos(heading), s[1] + r * math.sin(heading))
        if oracle_space(e, b.defenders, sigma, rho_floor) - base >= target:
            break
        r += 0.5
    return s, e


INTENTS: dict[Archetype, tuple[Proposal, Accept]] = {
    Archetype.CIRCULATORY: (
        _propose_circulatory,
        lambda lbs, sgm, sdi: lbs == 0 and abs(sdi) < 3.0 and abs(sgm) < 0.5,
    ),
    Archetype.DESTABILISING: (
        _propose_destabilising,
        lambda lbs, sgm, sdi: lbs == 0 and 12.0 <= sdi <= 30.0 and abs(sgm) < 1.0,
    ),
    Archetype.LINE_BREAKING: (
        _propose_line_breaking,
        lambda lbs, sgm, sdi: lbs >= 3 and abs(sgm) < 1.5,
    ),
    Archetype.SPACE_EXPANDING: (
        _propose_space_expanding,
        lambda lbs, sgm, sdi: lbs == 0 and 4.0 <= sgm <= 7.0,
    ),
}


@dataclass(frozen=True)
class SyntheticPass:
    intent: Archetype
    start: Pt
    end: Pt
    defenders: list[Pt]
    lbs: int
    sgm: float
    sdi: float


def make_pass(
    intent: Archetype, spec: ScenarioSpec, rng: random.Random, pitch: Pitch
) -> SyntheticPass:
    propose, accept = INTENTS[intent]
    for _ in range(MAX_ATTEMPTS):
        block = _layout(spec, rng, pitch)
        if intent is Archetype.SPACE_EXPANDING:
            s, e = _propose_space_expanding(block, rng, pitch, spec.sigma, spec.rho_floor)
        else:
            s, e = propose(block, rng, pitch)
        s, e = _clip(s, pitch), _clip(e, pitch)
        lbs, sgm, sdi = oracle_metrics(s, e, block.defenders, spec.sigma, spec.rho_floor)
        if accept(lbs, sgm, sdi):
            return SyntheticPass(intent, s, e, block.defenders, lbs, sgm, sdi)
    raise GenerationError(
        f"could not construct a {intent.value} pass with {spec.n_defenders} defenders "
        f"from template {spec.defense_template!r}"
    )


def _intent_sequence(spec: ScenarioSpec, n: int, rng: random.Random) -> list[Archetype]:
    arch = [a for a in ARCHETYPE_ORDER if spec.pass_mix.get(a, 0) > 0]
    return rng.choices(arch, weights=[spec.pass_mix[a] for a in arch], k=n)


def generate_passes(spec: ScenarioSpec, n: int, pitch: Pitch | None = None) -> list[SyntheticPass]:
    """In-memory passes only; no match files."""
    pitch = pitch or Pitch()
    rng = random.Random(spec.seed)
    return [make_pass(a, spec, rng, pitch) for a in _intent_sequence(spec, n, rng)]


# --------------------------------------------------------------- matches

HOME, AWAY = "H", "A"


def _roster(team: str) -> dict[str, dict[str, Any]]:
    out = {f"{team}1": {"team_id": team, "role": "goalkeeper", "jersey": 1}}
    for k in range(2, 12):
        out[f"{team}{k}"] = {"team_id": team, "role": "outfield", "jersey": k}
    return out


class _MatchWriter:
    def __init__(self, match_id: str, spec: ScenarioSpec, rng: random.Random, pitch: Pitch):
        self.match_id = match_id
        self.spec = spec
        self.rng = rng
        self.pitch = pitch
        self.events: list[dict[str, Any]] = []
        self.frames: list[dict[str, Any]] = []
        self.truth: list[dict[str, Any]] = []
        self.frame_id = 0
        self.event_id = 0

    # home attacks +y in period 1, -y in period 2
    def to_provider(self, p: Pt, team: str, period: int) -> list[float]:
        up = (team == HOME) == (period == 1)
        if up:
            return [p[0], p[1]]
        return [self.pitch.width - p[0], self.pitch.length - p[1]]

    def _event(self, **kw: Any) -> str:
        self.event_id += 1
        eid = f"e{self.event_id:05d}"
        record = {
            "event_id": eid,
            "type": kw["type"],
            "t": kw["t"],
            "period": kw["period"],
            "team_id": kw["team"],
            "actor_id": kw["actor"],
            "start": kw.get("start"),
            "end": kw.get("end"),
            "success": kw["success"],
            "set_piece": kw.get("set_piece"),
        }
        if "receiver" in kw:
            record["receiver_id"] = kw["receiver"]
        self.events.append(record)
        return eid

    def _burst(self, t: float, period: int, team: str, sp: SyntheticPass, passer: str, receiver: str) -> None:
        opp = AWAY if team == HOME else HOME
        rng = self.rng
        players: dict[str, Pt] = {}
        for k, d in enumerate(sp.defenders):
            players[f"{opp}{k + 2}"] = d
        players[f"{opp}1"] = (self.pitch.width / 2, self.pitch.length - 3.0)
        players[passer] = sp.start
        players[receiver] = sp.end
        players[f"{team}1"] = (self.pitch.width / 2, 5.0)
        for k in range(2, 12):
            pid = f"{team}{k}"
            if pid not in players:
                players[pid] = (rng.uniform(5, self.pitch.width - 5), rng.uniform(10, 60))
        for j in range(-BURST_HALF, BURST_HALF + 1):
            self.frame_id += 1
            pos = {}
            for pid in sorted(players):
                x, y = players[pid]
                if self.spec.jitter_sd > 0:
                    x += float(rng.gauss(0, self.spec.jitter_sd))
                    y += float(rng.gauss(0, self.spec.jitter_sd))
                pos[pid] = self.to_provider((x, y), team, period)
            self.frames.append(
                {
                    "frame_id": self.frame_id,
                    "t": t + j / FRAME_RATE,
                    "period": period,
                    "players": pos,
                    "ball": self.to_provider(sp.start, team, period),
                }
            )

    def build(self) -> None:
        spec, rng, pitch = self.spec, self.rng, self.pitch
        n = spec.passes_per_match
        intents = _intent_sequence(spec, n, rng)
        t = {1: 1.0, 2: 1.0}
        team = HOME
        made = 0
        while made < n:
            period = 1 if made < n / 2 else 2
            possession = rng.randint(1, 6)
            if rng.random() < 0.2:
                # a restart pass that must be filtered out
                kind = rng.choice(("corner", "throw_in", "free_kick", "goal_kick"))
                actor = f"{team}{rng.randint(2, 11)}"
                p0 = (rng.uniform(5, 63), rng.uniform(20, 90))
                self._event(
                    type="pass", t=round(t[period], 4), period=period, team=team, actor=actor,
                    start=self.to_provider(p0, team, period),
                    end=self.to_provider(_clip((p0[0] + 8, p0[1] + 5), pitch), team, period),
                    success=True, set_piece=kind, receiver=f"{team}{(int(actor[1:]) % 10) + 2}",
                )
                t[period] += PASS_SPACING_S
            passer = f"{team}{rng.randint(2, 11)}"
            for _ in range(possession):
                if made >= n:
                    break
                sp = make_pass(intents[made], spec, rng, pitch)
                receiver = passer
                while receiver == passer:
                    receiver = f"{team}{rng.randint(2, 11)}"
                tt = round(t[period], 4)
                eid = self._event(
                    type="pass", t=tt, period=period, team=team, actor=passer,
                    start=self.to_provider(sp.start, team, period),
                    end=self.to_provider(sp.end, team, period),
                    success=True, receiver=receiver,
                )
                self._burst(tt, period, team, sp, passer, receiver)
                self.truth.append(
                    {
                        "pass_id": f"{self.match_id}:{eid}",
                        "intent": sp.intent.value,
                        "lbs": sp.lbs,
                        "sgm": sp.sgm,
                        "sdi": sp.sdi,
                    }
                )
                made += 1
                passer = receiver
                t[period] += PASS_SPACING_S
            if rng.random() < 0.15:
                shot_at = (rng.uniform(25, 43), rng.uniform(88, 100))
                self._event(
                    type="shot", t=round(t[period], 4), period=period, team=team, actor=passer,
                    start=self.to_provider(shot_at, team, period),
                    end=self.to_provider((pitch.width / 2, pitch.length), team, period),
                    success=rng.random() < 0.15,
                )
                t[period] += PASS_SPACING_S
            opp = AWAY if team == HOME else HOME
            if rng.random() < 0.3:
                # failed pass, then the opponent wins the ball
                self._event(
                    type="pass", t=round(t[period], 4), period=period, team=team, actor=passer,
                    start=self.to_provider((30.0, 50.0), team, period),
                    end=self.to_provider((34.0, 75.0), team, period),
                    success=False, receiver=None,
                )
                t[period] += 1.0
            self._event(
                type="interception", t=round(t[period], 4), period=period, team=opp,
                actor=f"{opp}{rng.randint(2, 11)}",
                start=self.to_provider((34.0, 30.0), opp, period), end=None, success=True,
            )
            t[period] += PASS_SPACING_S
            team = opp

    def meta(self) -> dict[str, Any]:
        roster = _roster(HOME)
        roster.update(_roster(AWAY))
        return {
            "match_id": self.match_id,
            "pitch": self.pitch.to_dict(),
            "frame_rate": FRAME_RATE,
            "home_team_id": HOME,
            "away_team_id": AWAY,
            "home_attacks_positive_y": {"1": True, "2": False},
            "roster": roster,
        }


def _dump_jsonl(path: Path, rows: list[dict[str, Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(json.dumps(r, separators=(",", ":")) + "\n")


def generate(spec: ScenarioSpec, out_dir: str | Path, pitch: Pitch | None = None) -> list[Path]:
    """Write ``spec.n_matches`` canonical match directories under ``out_dir``."""
    pitch = pitch or Pitch()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_matches)
    dirs = []
    for m, ss in enumerate(seeds):
        match_id = f"syn{m + 1:03d}"
        w = _MatchWriter(match_id, spec, random.Random(int(ss.generate_state(1)[0])), pitch)
        w.build()
        d = out_dir / match_id
        d.mkdir(exist_ok=True)
        (d / "meta.json").write_text(json.dumps(w.meta(), indent=1) + "\n", encoding="utf-8")
        _dump_jsonl(d / "events.jsonl", w.events)
        _dump_jsonl(d / "tracking.jsonl", w.frames)
        _dump_jsonl(d / "ground_truth.jsonl", w.truth)
        dirs.append(d)
    (out_dir / "scenario.json").write_text(json.dumps(spec.to_dict(), indent=1) + "\n", encoding="utf-8")
    return dirs


def read_ground_truth(match_dir: str | Path) -> list[dict[str, Any]]:
    with (Path(match_dir) / "ground_truth.jsonl").open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
