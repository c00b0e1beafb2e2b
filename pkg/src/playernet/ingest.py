"""Match-log parsing, validation and the minimum-activity filter.

The input is one JSON object per line::

    {"match_id": "m1", "start_time": 1600000000, "duration": 600,
     "team_a": [{"player_id": "p1", "seconds_played": 600, "completed": true}],
     "team_b": [{"player_id": "p2", "seconds_played": 580, "completed": false}]}

Malformed lines never abort a run; they are collected in a :class:`SkipReport`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable

log = logging.getLogger(__name__)

WEEK_SECONDS = 7 * 24 * 3600


@dataclass(frozen=True)
class PlayerParticipation:
    player_id: str
    seconds_played: int
    completed: bool


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    start_time: int
    duration: int
    team_a: tuple[PlayerParticipation, ...]
    team_b: tuple[PlayerParticipation, ...]

    @property
    def participations(self) -> tuple[PlayerParticipation, ...]:
        return self.team_a + self.team_b

    def players(self) -> set[str]:
        return {p.player_id for p in self.participations}

    def to_dict(self) -> dict:
        def team(ps):
            return [
                {"player_id": p.player_id, "seconds_played": p.seconds_played, "completed": p.completed}
                for p in ps
            ]

        return {
            "match_id": self.match_id,
            "start_time": self.start_time,
            "duration": self.duration,
            "team_a": team(self.team_a),
            "team_b": team(self.team_b),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass
class SkipReport:
    """Lines that were dropped while parsing, with the reason for each."""

    skipped: list[tuple[int, str]] = field(default_factory=list)
    duplicates: list[tuple[int, str]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.skipped) + len(self.duplicates)

    def lines(self) -> list[str]:
        out = [f"line {n}: {reason}" for n, reason in self.skipped]
        out += [f"line {n}: duplicate match_id {mid!r} (superseded by a later line)" for n, mid in self.duplicates]
        return out

    def render(self) -> str:
        head = f"skipped {len(self.skipped)} malformed line(s), {len(self.duplicates)} duplicate match id(s)"
        return "\n".join([head, *self.lines()])


class MalformedRecord(ValueError):
    pass


def _require_int(obj: dict, key: str) -> int:
    if key not in obj:
        raise MalformedRecord(f"missing field {key!r}")
    value = obj[key]
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRecord(f"field {key!r} must be an integer")
    if value < 0:
        raise MalformedRecord(f"field {key!r} must be non-negative")
    return value


def _parse_team(obj: dict, key: str, duration: int) -> tuple[PlayerParticipation, ...]:
    if key not in obj:
        raise MalformedRecord(f"missing field {key!r}")
    raw = obj[key]
    if not isinstance(raw, list) or not raw:
        raise MalformedRecord(f"field {key!r} must be a non-empty array")
    team = []
    seen = set()
    for entry in raw:
        if not isinstance(entry, dict):
            raise MalformedRecord(f"{key} entries must be objects")
        pid = entry.get("player_id")
        if not isinstance(pid, str) or not pid:
            raise MalformedRecord(f"{key}: player_id must be a non-empty string")
        if pid in seen:
            raise MalformedRecord(f"{key}: player {pid!r} listed twice")
        seen.add(pid)
        seconds = _require_int(entry, "seconds_played")
        if seconds > duration:
            raise MalformedRecord(f"{key}: player {pid!r} seconds_played exceeds duration")
        completed = entry.get("completed")
        if not isinstance(completed, bool):
            raise MalformedRecord(f"{key}: completed must be a boolean")
        team.append(PlayerParticipation(pid, seconds, completed))
    return tuple(team)


def record_from_dict(obj) -> MatchRecord:
    """Validate one decoded object; raises :class:`MalformedRecord`."""
    if not isinstance(obj, dict):
        raise MalformedRecord("record must be an object")
    match_id = obj.get("match_id")
    if not isinstance(match_id, str) or not match_id:
        raise MalformedRecord("match_id must be a non-empty string")
    start_time = _require_int(obj, "start_time")
    duration = _require_int(obj, "duration")
    team_a = _parse_team(obj, "team_a", duration)
    team_b = _parse_team(obj, "team_b", duration)
    overlap = {p.player_id for p in team_a} & {p.player_id for p in team_b}
    if overlap:
        raise MalformedRecord(f"player(s) on both teams: {sorted(overlap)}")
    return MatchRecord(match_id, start_time, duration, team_a, team_b)


def parse_match_log(stream: IO[bytes] | Iterable[bytes | str]) -> tuple[list[MatchRecord], SkipReport]:
    """Parse a line-delimited match log.

    Returns the well-formed records in input order together with a skip
    report. Blank lines are ignored. When a ``match_id`` repeats, the last
    occurrence wins and the earlier one is counted as a duplicate. I/O errors
    from the underlying stream propagate.
    """
    report = SkipReport()
    by_id: dict[str, tuple[int, MatchRecord]] = {}
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                report.skipped.append((lineno, "not valid UTF-8"))
                continue
        else:
            line = raw
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.skipped.append((lineno, f"invalid JSON ({exc.msg})"))
            continue
        try:
            record = record_from_dict(obj)
        except MalformedRecord as exc:
            report.skipped.append((lineno, str(exc)))
            continue
        if record.match_id in by_id:
            report.duplicates.append((by_id[record.match_id][0], record.match_id))
        by_id[record.match_id] = (lineno, record)

    ordered = sorted(by_id.values(), key=lambda item: item[0])
    if report.count:
        log.info("parse_match_log: %s", report.render().splitlines()[0])
    return [rec for _, rec in ordered], report


def read_match_log(path) -> tuple[list[MatchRecord], SkipReport]:
    with open(path, "rb") as fh:
        return parse_match_log(fh)


def write_match_log(records: Iterable[MatchRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def corpus_anchor(records: Iterable[MatchRecord]) -> int | None:
    """Earliest start time in the corpus; the origin of every time bin."""
    return min((r.start_time for r in records), default=None)


def active_weeks(records: Iterable[MatchRecord], anchor: int | None = None) -> dict[str, set[int]]:
    records = list(records)
    if anchor is None:
        anchor = corpus_anchor(records)
    weeks: dict[str, set[int]] = {}
    for rec in records:
        week = (rec.start_time - anchor) // WEEK_SECONDS
        for p in rec.participations:
            weeks.setdefault(p.player_id, set()).add(week)
    return weeks


def _drop_players(records: list[MatchRecord], keep: set[str]) -> list[MatchRecord]:
    out = []
    for rec in records:
        team_a = tuple(p for p in rec.team_a if p.player_id in keep)
        team_b = tuple(p for p in rec.team_b if p.player_id in keep)
        if not team_a or not team_b:
            continue
        if len(team_a) == len(rec.team_a) and len(team_b) == len(rec.team_b):
            out.append(rec)
        else:
            out.append(MatchRecord(rec.match_id, rec.start_time, rec.duration, team_a, team_b))
    return out


def filter_short_lived_players(
    records: list[MatchRecord], min_weeks: int = 5
) -> tuple[list[MatchRecord], set[str]]:
    """Keep only players active in at least ``min_weeks`` distinct week bins.

    Week bins are anchored at the earliest match of the corpus. Dropping a
    player can empty a team, and dropping that match can in turn push another
    player (or the anchor) below the bar, so the filter is repeated until the
    retained set is stable. The result is therefore idempotent.
    """
    if min_weeks < 1:
        raise ValueError("min_weeks must be >= 1")
    current = list(records)
    while True:
        weeks = active_weeks(current)
        keep = {pid for pid, ws in weeks.items() if len(ws) >= min_weeks}
        filtered = _drop_players(current, keep)
        if len(filtered) == len(current) and keep == set(weeks):
            return filtered, keep
        current = filtered
