"""CSV ingestion and synthetic data.

File schemas (UTF-8, comma separated, header row in exactly this order)::

    rounds.csv      event_id,player_id,round_index,date,strokes
    events.csv      event_id,name,start_date
    money_list.csv  rank,player_id

Dates are ISO-8601. Identifiers are restricted to ``[A-Za-z0-9_-]``.
"""

from __future__ import annotations

import csv
import datetime as dt
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from gaussgolf import rng as _rng
from gaussgolf.errors import DataError, ValidationError
from gaussgolf.score_model import RoundScore, round_half_away, rounded_normal

ROUNDS_HEADER = ("event_id", "player_id", "round_index", "date", "strokes")
EVENTS_HEADER = ("event_id", "name", "start_date")
MONEY_HEADER = ("rank", "player_id")

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


@dataclass(frozen=True)
class EventInfo:
    event_id: str
    name: str
    start_date: dt.date


@dataclass(frozen=True)
class Dataset:
    rounds: tuple[RoundScore, ...]
    events: tuple[EventInfo, ...] = ()
    money_list: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        known = {e.event_id for e in self.events}
        if known:
            for r in self.rounds:
                if r.event_id not in known:
                    raise ValidationError(f"round references unknown event {r.event_id!r}")
        _check_money_ranks([rank for rank, _ in self.money_list])

    @property
    def money_ranks(self) -> dict[str, int]:
        return {pid: rank for rank, pid in self.money_list}

    def event_scores(self, event_id: str) -> list[int]:
        return [r.strokes for r in self.rounds if r.event_id == event_id]

    @property
    def event_ids(self) -> list[str]:
        seen = dict.fromkeys(r.event_id for r in self.rounds)
        return list(seen)


def _check_money_ranks(ranks: Sequence[int]):
    if sorted(ranks) != list(range(1, len(ranks) + 1)):
        raise ValidationError("money-list ranks must be unique and contiguous from 1")


def _rows(path: Path, header: tuple[str, ...]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise DataError("file is empty", line=1) from None
        if tuple(h.strip() for h in head) != header:
            raise DataError(f"header must be {','.join(header)}, got {','.join(head)}", line=1)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
            yield reader.line_num, [c.strip() for c in row]


def _ident(value: str, what: str, line: int) -> str:
    if not _ID_RE.match(value):
        raise DataError(f"invalid {what} {value!r}", line=line)
    return value


def _int(value: str, what: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"{what} is not an integer: {value!r}", line=line) from None


def _date(value: str, what: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise DataError(f"{what} is not an ISO date: {value!r}", line=line) from None


def load_rounds(path) -> list[RoundScore]:
    out: list[RoundScore] = []
    seen: dict[tuple, int] = {}
    for line, (eid, pid, ridx, date, strokes) in _rows(Path(path), ROUNDS_HEADER):
        try:
            rs = RoundScore(
                event_id=_ident(eid, "event_id", line),
                player_id=_ident(pid, "player_id", line),
                round_index=_int(ridx, "round_index", line),
                date=_date(date, "date", line),
                strokes=_int(strokes, "strokes", line),
            )
        except DataError:
            raise
        except ValidationError as exc:  # RoundScore invariants
            raise DataError(str(exc), line=line) from None
        if rs.key in seen:
            raise DataError(f"duplicate key {rs.key} (first seen on line {seen[rs.key]})", line=line)
        seen[rs.key] = line
        out.append(rs)
    return out


def write_rounds(path, rounds: Iterable[RoundScore]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROUNDS_HEADER)
        for r in rounds:
            w.writerow([r.event_id, r.player_id, r.round_index, r.date.isoformat(), r.strokes])


def load_events(path) -> list[EventInfo]:
    out = []
    ids = set()
    for line, (eid, name, start) in _rows(Path(path), EVENTS_HEADER):
        eid = _ident(eid, "event_id", line)
        if eid in ids:
            raise DataError(f"duplicate event_id {eid!r}", line=line)
        ids.add(eid)
        out.append(EventInfo(eid, name, _date(start, "start_date", line)))
    return out


def write_events(path, events: Iterable[EventInfo]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for e in events:
            w.writerow([e.event_id, e.name, e.start_date.isoformat()])


def load_money_list(path) -> list[tuple[int, str]]:
    out = []
    players = set()
    for line, (rank, pid) in _rows(Path(path), MONEY_HEADER):
        pid = _ident(pid, "player_id", line)
        if pid in players:
            raise DataError(f"player {pid!r} listed twice", line=line)
        players.add(pid)
        out.append((_int(rank, "rank", line), pid))
    _check_money_ranks([r for r, _ in out])
    return sorted(out)


def write_money_list(path, money_list: Iterable[tuple[int, str]]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MONEY_HEADER)
        for rank, pid in money_list:
            w.writerow([rank, pid])


def load_dataset(rounds_path, events_path=None, money_path=None) -> Dataset:
    return Dataset(
        rounds=tuple(load_rounds(rounds_path)),
        events=tuple(load_events(events_path)) if events_path else (),
        money_list=tuple(load_money_list(money_path)) if money_path else (),
    )


def synth_event(
    mu: float,
    sigma: float,
    n_scores: int,
    seed: int,
    event_id: str = "E001",
    rounds_per_player: int = 4,
    start_date: dt.date = dt.date(2007, 1, 4),
) -> list[RoundScore]:
    """``n_scores`` rounded-Gaussian scores laid out as players x rounds."""
    if not sigma >= 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    if n_scores < 1 or rounds_per_player < 1:
        raise ValidationError("n_scores and rounds_per_player must be >= 1")
    strokes = rounded_normal(_rng.stream(seed, _rng.TAG_SYNTH), mu, sigma, n_scores)
    if strokes.min() <= 0:
        raise ValidationError("parameters produce non-positive scores")
    out = []
    for i, s in enumerate(strokes.tolist()):
        player, rnd = divmod(i, rounds_per_player)
        out.append(
            RoundScore(
                event_id=event_id,
                player_id=f"P{player + 1:04d}",
                round_index=rnd + 1,
                date=start_date + dt.timedelta(days=rnd),
                strokes=s,
            )
        )
    return out


@dataclass(frozen=True)
class SeasonTruth:
    """Parameters a synthetic season was generated from."""

    event_mu: np.ndarray = field(repr=False)
    event_sigma: np.ndarray = field(repr=False)
    player_mu_z: dict = field(repr=False)
    player_trend: dict = field(repr=False)


def synth_season(
    seed: int,
    n_events: int = 46,
    n_players: int = 200,
    field_size: int = 150,
    rounds: int = 4,
    money_slope: float = 0.0023,
    mu_sigma_slope: float = 0.12,
    player_sigma_z: float = 1.0,
    trend_sd: float = 0.3,
    start: dt.date = dt.date(2007, 1, 4),
) -> tuple[Dataset, SeasonTruth]:
    """A season of stroke-play events with planted structure.

    Player ``r`` (money rank ``r``) has mean z ``money_slope * (r - 125)``
    plus a linear within-season drift drawn with spread ``trend_sd``. Event
    means span roughly 68.5-76 strokes and the event spread follows
    ``sigma_s = 2.9 + mu_sigma_slope * (mu_s - 71)``.
    """
    if field_size > n_players:
        raise ValidationError("field_size exceeds n_players")
    gen = _rng.stream(seed, _rng.TAG_SYNTH)
    ranks = np.arange(1, n_players + 1)
    ability = money_slope * (ranks - 125.0)
    drift = trend_sd * gen.standard_normal(n_players)
    event_mu = np.clip(71.0 + 1.6 * gen.standard_normal(n_events), 68.5, 76.5)
    event_sigma = 2.9 + mu_sigma_slope * (event_mu - 71.0)
    pids = [f"P{r:04d}" for r in ranks]

    events = []
    rounds_out = []
    for e in range(n_events):
        eid = f"E{e + 1:03d}"
        day0 = start + dt.timedelta(days=7 * e)
        events.append(EventInfo(eid, f"Event {e + 1}", day0))
        season_pos = e / max(1, n_events - 1) - 0.5
        entrants = np.sort(gen.choice(n_players, size=field_size, replace=False))
        z = ability[entrants] + drift[entrants] * season_pos
        noise = player_sigma_z * gen.standard_normal((rounds, field_size))
        raw = event_mu[e] + event_sigma[e] * (z[None, :] + noise)
        strokes = np.maximum(1, round_half_away(raw))
        for rd in range(rounds):
            for j, p in enumerate(entrants):
                rounds_out.append(
                    RoundScore(eid, pids[p], rd + 1, day0 + dt.timedelta(days=rd), int(strokes[rd, j]))
                )
    ds = Dataset(
        rounds=tuple(rounds_out),
        events=tuple(events),
        money_list=tuple((int(r), pids[r - 1]) for r in ranks),
    )
    truth = SeasonTruth(
        event_mu=event_mu,
        event_sigma=event_sigma,
        player_mu_z=dict(zip(pids, ability.tolist())),
        player_trend=dict(zip(pids, drift.tolist())),
    )
    return ds, truth


def check_identifier(value: str) -> str:
    if not _ID_RE.match(value):
        raise ValidationError(f"invalid identifier {value!r}")
    return value
