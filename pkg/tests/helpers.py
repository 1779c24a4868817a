from __future__ import annotations

from structpass.types import DefensiveSnapshot, PassEvent, Point2D

# "PASS/FAIL criterion N: ..." lines collected for the terminal summary
ACCEPTANCE_LINES: list[str] = []


def make_pass(
    start,
    end,
    defenders,
    *,
    pass_id: str = "m:e1",
    team: str = "H",
    passer: str = "H2",
    receiver: str = "H3",
    t: float = 0.0,
    period: int = 1,
) -> PassEvent:
    return PassEvent(
        pass_id=pass_id,
        match_id=pass_id.split(":")[0],
        team_id=team,
        passer_id=passer,
        receiver_id=receiver,
        t=t,
        start=Point2D(*start),
        end=Point2D(*end),
        snapshot=DefensiveSnapshot(tuple(Point2D(*d) for d in defenders)),
        period=period,
    )
