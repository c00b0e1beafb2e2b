"""Synthetic match corpora with planted influencers, followers and hubs.

Every player carries a weekly behaviour target in [0, 1]^4 that is realized
as concrete matches:

* match count    ``round(lo + (hi - lo) * b0)``
* mean gap       ``1h + 23h * b1`` (shrunk so a week's matches fit in 5 days)
* seconds/match  ``120 + 780 * b2``
* completion     ``round(b3 * count)`` completed matches

Only the first and last match of a week fix the mean gap, so interior
matches are free to be shared with teammates. Groups (an influencer with its
followers, or a background squad) share their first match each week and
fill interior slots with the leader's matches. Hubs fill each of their
matches with a few random background partners.

Roles:

* influencer: constant behaviour, no noise.
* follower: starts far from its influencer and moves a fraction
  ``mimic_rate`` of the remaining distance each week; its last active week is
  pulled towards the influencer's by the same fraction.
* hub: independent noisy behaviour, many one-off partners.
* background: independent noisy behaviour around a personal baseline, in
  squads that sit out a fraction ``skip_rate`` of their weeks together.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import SynthConfigError
from .ingest import MatchRecord, PlayerParticipation, write_match_log

HOUR = 3600
DAY = 24 * HOUR
WEEK = 7 * DAY
ROLES = ("influencer", "follower", "hub", "background")


@dataclass(frozen=True)
class SynthConfig:
    players: int = 1000
    weeks: int = 20
    influencers: int = 10
    hubs: int = 10
    followers_per_influencer: int = 8
    mimic_rate: float = 0.5
    noise: float = 0.05
    matches_per_week: tuple[int, int] = (2, 8)
    hub_partners: int = 3
    squad_size: tuple[int, int] = (2, 4)
    squad_shared_matches: int = 1
    skip_rate: float = 0.2
    min_lifetime_weeks: int = 5
    start_time: int = 1_600_000_000
    seed: int = 42

    def validate(self) -> None:
        planted = self.influencers * (1 + self.followers_per_influencer) + self.hubs
        if planted > self.players:
            raise SynthConfigError(f"planted roles need {planted} players but only {self.players} exist")
        if not 0.0 <= self.mimic_rate <= 1.0:
            raise SynthConfigError("mimic_rate must lie in [0, 1]")
        if self.noise < 0:
            raise SynthConfigError("noise must be non-negative")
        if self.weeks < self.min_lifetime_weeks or self.min_lifetime_weeks < 1:
            raise SynthConfigError("weeks must cover at least one minimum lifetime")
        lo, hi = self.matches_per_week
        if not 1 <= lo <= hi:
            raise SynthConfigError("matches_per_week must satisfy 1 <= lo <= hi")
        s_lo, s_hi = self.squad_size
        if not 1 <= s_lo <= s_hi:
            raise SynthConfigError("squad_size must satisfy 1 <= lo <= hi")
        if not 0.0 <= self.skip_rate < 1.0:
            raise SynthConfigError("skip_rate must lie in [0, 1)")
        if self.hub_partners < 1:
            raise SynthConfigError("hub_partners must be positive")


DESK_SCALE = SynthConfig(players=10_000, weeks=48, influencers=100, hubs=55, hub_partners=1)


@dataclass
class _Player:
    pid: str
    role: str
    start: int
    end: int
    behaviour: dict[int, np.ndarray] = field(default_factory=dict)
    skipped: frozenset[int] = frozenset()

    def active(self, week: int) -> bool:
        return self.start <= week <= self.end and week not in self.skipped


@dataclass(frozen=True)
class _Plan:
    count: int
    gap: int
    seconds: int
    completed: int


@dataclass
class SynthCorpus:
    records: list[MatchRecord]
    roles: dict[str, str]
    config: SynthConfig
    targets: dict[tuple[str, int], np.ndarray]

    def planted(self, role: str) -> set[str]:
        return {p for p, r in self.roles.items() if r == role}

    def write(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        corpus = directory / "corpus.jsonl"
        truth = directory / "ground_truth.csv"
        write_match_log(self.records, corpus)
        write_ground_truth(self.roles, truth)
        return corpus, truth


def write_ground_truth(roles: dict[str, str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "role"])
        for pid in sorted(roles):
            w.writerow([pid, roles[pid]])


def read_ground_truth(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["player_id"]: row["role"] for row in csv.DictReader(fh)}


def _plan(b: np.ndarray, cfg: SynthConfig) -> _Plan:
    lo, hi = cfg.matches_per_week
    count = int(round(lo + (hi - lo) * b[0]))
    gap = (1.0 + 23.0 * b[1]) * HOUR
    if count > 1:
        gap = min(gap, 5 * DAY / (count - 1))
    return _Plan(count, int(round(gap)) if count > 1 else 0, int(round(120 + 780 * b[2])),
                 int(round(b[3] * count)))


class _Week:
    """Team events of one week, before they are paired into matches."""

    def __init__(self) -> None:
        self.events: list[tuple[int, list[str]]] = []

    def add(self, time: int, members: list[str]) -> int:
        self.events.append((time, members))
        return len(self.events) - 1


def _extreme_profile(rng: np.random.Generator) -> np.ndarray:
    """Each feature near 0 or near 1, never all on the same side."""
    while True:
        high = rng.random(4) < 0.5
        if 0 < high.sum() < 4:
            break
    return np.where(high, rng.uniform(0.8, 1.0, 4), rng.uniform(0.0, 0.2, 4))


def _lifetime(rng: np.random.Generator, cfg: SynthConfig, start: int | None = None) -> tuple[int, int]:
    w, m = cfg.weeks, cfg.min_lifetime_weeks
    if start is None:
        start = int(rng.integers(0, w - m + 1))
    end = int(rng.integers(start + m - 1, w))
    return start, end


def generate(cfg: SynthConfig = SynthConfig()) -> SynthCorpus:
    """Build a corpus and its ground-truth roles; deterministic in ``cfg.seed``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    width = len(str(cfg.players - 1))
    ids = [f"p{i:0{width}d}" for i in range(cfg.players)]
    order = rng.permutation(cfg.players)
    pool = [ids[i] for i in order]

    players: dict[str, _Player] = {}
    groups: list[list[str]] = []  # leader first

    cursor = 0
    for _ in range(cfg.influencers):
        lead = pool[cursor]
        cursor += 1
        start = int(rng.integers(0, max(1, cfg.weeks // 4)))
        start, end = _lifetime(rng, cfg, start)
        inf = players[lead] = _Player(lead, "influencer", start, end)
        base = _extreme_profile(rng)
        members = [lead]
        for _ in range(cfg.followers_per_influencer):
            fid = pool[cursor]
            cursor += 1
            _, own_end = _lifetime(rng, cfg, start)
            f_end = int(round(own_end + cfg.mimic_rate * (end - own_end)))
            f_end = max(f_end, start + cfg.min_lifetime_weeks - 1)
            fol = players[fid] = _Player(fid, "follower", start, f_end)
            state = np.clip(1.0 - base + rng.normal(0.0, 0.05, 4), 0.0, 1.0)
            for t in range(start, f_end + 1):
                if t > start:
                    state = state + cfg.mimic_rate * (base - state)
                fol.behaviour[t] = np.clip(state + rng.normal(0.0, cfg.noise, 4), 0.0, 1.0)
            members.append(fid)
        for t in range(start, end + 1):
            inf.behaviour[t] = base
        groups.append(members)

    hubs = []
    for _ in range(cfg.hubs):
        hid = pool[cursor]
        cursor += 1
        hub = players[hid] = _Player(hid, "hub", 0, cfg.weeks - 1)
        base = rng.uniform(0.2, 0.8, 4)
        for t in range(cfg.weeks):
            hub.behaviour[t] = np.clip(base + rng.normal(0.0, cfg.noise, 4), 0.0, 1.0)
        hubs.append(hid)

    background = pool[cursor:]
    s_lo, s_hi = cfg.squad_size
    i = 0
    while i < len(background):
        size = int(rng.integers(s_lo, s_hi + 1))
        squad = background[i:i + size]
        i += size
        start, _ = _lifetime(rng, cfg)
        # whole squads sit out weeks together, so nobody's return coincides
        # with a teammate who kept playing
        ends = [_lifetime(rng, cfg, start)[1] for _ in squad]
        skips = [t for t in range(start + 1, cfg.weeks) if rng.random() < cfg.skip_rate]
        # drop the latest skips until every member keeps a full minimum lifetime
        while skips and any(e - start + 1 - sum(t < e for t in skips) < cfg.min_lifetime_weeks for e in ends):
            skips.pop()
        for pid, end in zip(squad, ends):
            p = players[pid] = _Player(pid, "background", start, end,
                                       skipped=frozenset(t for t in skips if t < end))
            base = rng.uniform(0.0, 1.0, 4)
            for t in range(start, end + 1):
                if p.active(t):
                    p.behaviour[t] = np.clip(base + rng.normal(0.0, cfg.noise, 4), 0.0, 1.0)
        groups.append(list(squad))

    records: list[MatchRecord] = []
    for week in range(cfg.weeks):
        records.extend(_realize_week(week, cfg, rng, players, groups, hubs))

    targets = {(p.pid, t): b for p in players.values() for t, b in p.behaviour.items()}
    return SynthCorpus(records, {p.pid: p.role for p in players.values()}, cfg, targets)


def _realize_week(week, cfg, rng, players, groups, hubs) -> list[MatchRecord]:
    ws = cfg.start_time + week * WEEK
    plans = {pid: _plan(p.behaviour[week], cfg) for pid, p in players.items() if p.active(week)}
    slots: dict[str, list[int]] = {pid: [] for pid in plans}  # event ids per player
    spans: dict[str, tuple[int, int]] = {}
    free: dict[str, list[int]] = {}  # solo interior events that a hub may take over
    ev = _Week()

    for members in groups:
        is_squad = players[members[0]].role == "background"
        active = [m for m in members if m in plans]
        if not active:
            continue
        first = ws + int(rng.integers(0, 12 * HOUR))
        if week == 0 and not ev.events:
            # pins the corpus's earliest match to the week origin so that
            # snapshot bins line up with the generator's weeks
            first = ws
        lead = active[0]
        lp = plans[lead]
        lead_times = [first + k * lp.gap for k in range(lp.count)]
        lead_events = [ev.add(t, [lead]) for t in lead_times]
        slots[lead].extend(lead_events)
        spans[lead] = (lead_times[0], lead_times[-1])
        for m in active[1:]:
            mp = plans[m]
            ev.events[lead_events[0]][1].append(m)
            slots[m].append(lead_events[0])
            if mp.count == 1:
                spans[m] = (first, first)
                continue
            last = first + mp.gap * (mp.count - 1)
            spans[m] = (first, last)
            cap = mp.count - 2
            if is_squad:
                cap = min(cap, cfg.squad_shared_matches - 1)
            inner = [e for t, e in zip(lead_times, lead_events) if first < t < last][: max(cap, 0)]
            for e in inner:
                ev.events[e][1].append(m)
                slots[m].append(e)
            n_solo = mp.count - 2 - len(inner)
            for q in range(1, n_solo + 1):
                e = ev.add(first + (last - first) * q // (n_solo + 1) + 60, [m])
                slots[m].append(e)
                free.setdefault(m, []).append(e)
            last_match = [e for t, e in zip(lead_times, lead_events)
                          if t == last and e not in inner and not (is_squad and len(inner) + 1 >= cfg.squad_shared_matches)]
            if last_match:
                ev.events[last_match[0]][1].append(m)
                slots[m].append(last_match[0])
            else:
                slots[m].append(ev.add(last, [m]))

    # Hubs: every hub match takes a few fresh background partners. Partners
    # must have been active the week before (no onset effects), must have a
    # solo interior slot whose span covers the match, and meet at most one
    # hub per week so that no background player turns into a hidden hub.
    background = [p for p in sorted(plans)
                  if players[p].role == "background" and free.get(p)
                  and (week == 0 or players[p].active(week - 1))]
    lo = np.array([spans[p][0] for p in background], dtype=np.int64)
    hi = np.array([spans[p][1] for p in background], dtype=np.int64)
    taken = np.zeros(len(background), dtype=bool)
    for hid in hubs:
        hp = plans[hid]
        first = ws + int(rng.integers(12 * HOUR, 36 * HOUR))
        times = [first + k * hp.gap for k in range(hp.count)]
        events = [ev.add(t, [hid]) for t in times]
        slots[hid].extend(events)
        spans[hid] = (times[0], times[-1])
        for t, e in zip(times, events):
            eligible = np.flatnonzero(~taken & (lo < t) & (t < hi))
            k = min(cfg.hub_partners, eligible.size)
            if not k:
                continue
            for idx in np.sort(rng.choice(eligible, size=k, replace=False)):
                taken[idx] = True
                partner = background[idx]
                e_old = free[partner].pop()
                ev.events[e_old] = (ev.events[e_old][0], [])
                slots[partner].remove(e_old)
                ev.events[e][1].append(partner)
                slots[partner].append(e)

    # per-player completion flags: the earliest `completed` slots are completed
    flags: dict[tuple[int, str], bool] = {}
    for pid, evs in slots.items():
        chrono = sorted(evs, key=lambda e: (ev.events[e][0], e))
        for rank, e in enumerate(chrono):
            flags[(e, pid)] = rank < plans[pid].completed

    live = sorted((e for e, (_, mem) in enumerate(ev.events) if mem), key=lambda e: (ev.events[e][0], e))
    return _pair_events(week, live, ev, plans, flags)


def _pair_events(week, live, ev, plans, flags) -> list[MatchRecord]:
    """Pair consecutive team events into two-team matches.

    A match starts at the earlier of its two events, which shifts the later
    event by at most the spacing between neighbouring events.
    """
    waiting: list[int] = []
    matches: list[tuple[list[int], list[int]]] = []
    for e in live:
        members = set(ev.events[e][1])
        for j, w in enumerate(waiting):
            if not members & set(ev.events[w][1]):
                waiting.pop(j)
                matches.append(([w], [e]))
                break
        else:
            waiting.append(e)
    # leftovers join the closest match whose players they do not overlap
    for e in waiting:
        members = set(ev.events[e][1])
        t = ev.events[e][0]
        best = None
        for mi, (ta, tb) in enumerate(matches):
            used = {p for x in ta + tb for p in ev.events[x][1]}
            if members & used:
                continue
            dt = abs(ev.events[ta[0]][0] - t)
            if best is None or dt < best[0]:
                best = (dt, mi)
        if best is not None:
            matches[best[1]][1].append(e)

    out = []
    for n, (ta, tb) in enumerate(matches):
        start = min(ev.events[x][0] for x in ta + tb)

        def team(evs):
            return tuple(
                PlayerParticipation(p, plans[p].seconds, flags[(x, p)])
                for x in evs for p in sorted(ev.events[x][1])
            )

        team_a, team_b = team(ta), team(tb)
        duration = max(p.seconds_played for p in team_a + team_b)
        out.append(MatchRecord(f"w{week:03d}-{n:06d}", int(start), int(duration), team_a, team_b))
    out.sort(key=lambda r: (r.start_time, r.match_id))
    return out


def evaluate_recovery(detected: set[str], planted: set[str]) -> tuple[float, float]:
    """Precision and recall of ``detected`` against ``planted``."""
    if not planted:
        raise SynthConfigError("planted set is empty")
    hit = len(detected & planted)
    precision = hit / len(detected) if detected else 0.0
    return precision, hit / len(planted)


def config_to_dict(cfg: SynthConfig) -> dict:
    return asdict(cfg)


def with_overrides(cfg: SynthConfig, **kwargs) -> SynthConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
