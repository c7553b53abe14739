"""Field-relative performance via z-scores.

A round's z-score is ``(strokes - mu_s) / sigma_s`` using the moments of
every round at that event, so a negative z is better than the field.
"""

from __future__ import annotations

import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from gaussgolf.errors import DomainError, InsufficientDataError, ValidationError
from gaussgolf.score_model import EventModel, RoundScore, fit_moments

MONEY_CUT = 125


@dataclass(frozen=True)
class ZScore:
    player_id: str
    event_id: str
    round_index: int
    date: dt.date | None
    z: float

    def sort_key(self):
        return (self.date or dt.date.min, self.event_id, self.round_index)


@dataclass(frozen=True)
class PlayerZProfile:
    player_id: str
    z_series: tuple[ZScore, ...]
    mu_z: float
    sigma_z: float
    stderr: float
    n: int

    @property
    def values(self) -> np.ndarray:
        return np.array([s.z for s in self.z_series])


@dataclass(frozen=True)
class TrendFit:
    """Least-squares line of z against observation index 0..n-1."""

    slope: float
    intercept: float
    start_value: float
    end_value: float
    delta: float


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    n_points: int


@dataclass(frozen=True)
class Improvement:
    player_id: str
    money_rank: int
    trend: TrendFit


def ols(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Unweighted least squares of ``y`` on ``x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("x and y must be 1-d and equally long")
    if x.size < 2:
        raise InsufficientDataError("need at least 2 points for a line")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DomainError("degenerate regression: all abscissae identical")
    slope = float(xc @ (y - y.mean())) / sxx
    return LinearFit(slope, float(y.mean() - slope * x.mean()), int(x.size))


def round_zscores(event_model: EventModel, scores: Iterable[RoundScore]) -> list[ZScore]:
    if not event_model.sigma_s > 0:
        raise DomainError(f"degenerate event {event_model.event_id!r}: sigma_s = 0")
    mu, sigma = event_model.mu_s, event_model.sigma_s
    return [
        ZScore(s.player_id, s.event_id, s.round_index, s.date, (s.strokes - mu) / sigma)
        for s in scores
    ]


def fit_events(rounds: Iterable[RoundScore], per_round: bool = False) -> dict:
    """Fit a Gaussian model per event (or per (event, round) when ``per_round``)."""
    groups: dict = defaultdict(list)
    for r in rounds:
        key = (r.event_id, r.round_index) if per_round else r.event_id
        groups[key].append(r.strokes)
    return {k: fit_moments(v, event_id=k) for k, v in groups.items()}


def season_zscores(rounds: Sequence[RoundScore], per_round: bool = False) -> list[ZScore]:
    """Standardize every round against its event's pooled moments.

    With ``per_round`` each round of an event is standardized on its own.
    """
    models = fit_events(rounds, per_round)
    grouped: dict = defaultdict(list)
    for r in rounds:
        grouped[(r.event_id, r.round_index) if per_round else r.event_id].append(r)
    out: list[ZScore] = []
    for key, rs in grouped.items():
        out.extend(round_zscores(models[key], rs))
    return out


def player_aggregate(z_series: Sequence[ZScore], player_id: str | None = None) -> PlayerZProfile:
    """Mean, population std and standard error of a player's z-scores.

    A single observation gives ``sigma_z = stderr = 0``.
    """
    if not z_series:
        raise InsufficientDataError("empty z-score series")
    ordered = tuple(sorted(z_series, key=ZScore.sort_key))
    z = np.array([s.z for s in ordered])
    n = z.size
    mu = float(z.mean())
    sigma = float(math.sqrt(np.mean((z - mu) ** 2))) if n > 1 else 0.0
    pid = player_id if player_id is not None else ordered[0].player_id
    return PlayerZProfile(pid, ordered, mu, sigma, sigma / math.sqrt(n), n)


def player_profiles(zscores: Iterable[ZScore]) -> dict[str, PlayerZProfile]:
    by_player: dict[str, list[ZScore]] = defaultdict(list)
    for s in zscores:
        by_player[s.player_id].append(s)
    return {pid: player_aggregate(series, pid) for pid, series in by_player.items()}


def mu_sigma_regression(event_models: Sequence[EventModel]) -> LinearFit:
    """Slope of sigma_s against mu_s across events."""
    if len(event_models) < 2:
        raise InsufficientDataError("need at least 2 events")
    return ols([m.mu_s for m in event_models], [m.sigma_s for m in event_models])


def money_list_regression(
    profiles: Sequence[PlayerZProfile], ranks: Sequence[int] | None = None
) -> LinearFit:
    """Fit mu_z against money-list position, leaving out the rank-1 player.

    ``profiles`` are in money order; ``ranks`` defaults to 1..len(profiles).
    """
    if ranks is None:
        ranks = range(1, len(profiles) + 1)
    ranks = list(ranks)
    if len(ranks) != len(profiles):
        raise ValidationError("ranks and profiles differ in length")
    if len(profiles) < 3:
        raise InsufficientDataError("need at least 3 players")
    pts = [(r, p.mu_z) for r, p in zip(ranks, profiles) if r != 1]
    if len(pts) < 2:
        raise InsufficientDataError("fewer than 2 players after excluding rank 1")
    x, y = zip(*pts)
    return ols(x, y)


def trend_fit(profile: PlayerZProfile) -> TrendFit:
    if profile.n < 2:
        raise InsufficientDataError("trend needs at least 2 rounds")
    idx = np.arange(profile.n, dtype=np.float64)
    slope, intercept, _ = ols(idx, profile.values)
    start = intercept
    end = intercept + slope * (profile.n - 1)
    return TrendFit(slope, intercept, start, end, end - start)


def most_improved(
    profiles: Iterable[PlayerZProfile],
    money_ranks: Mapping[str, int],
    top_k_money: int = MONEY_CUT,
    rank_by: str = "delta",
) -> list[Improvement]:
    """Players inside the money cut ordered by trend, most improved first.

    ``rank_by`` is ``"delta"`` (change over the season) or ``"slope"``.
    Players with fewer than two rounds have no trend and are skipped.
    """
    if rank_by not in ("delta", "slope"):
        raise ValidationError(f"rank_by must be 'delta' or 'slope', got {rank_by!r}")
    rows = []
    for p in profiles:
        rank = money_ranks.get(p.player_id)
        if rank is None or rank > top_k_money or p.n < 2:
            continue
        rows.append(Improvement(p.player_id, rank, trend_fit(p)))
    if not rows:
        raise InsufficientDataError("no eligible players")
    rows.sort(key=lambda r: (getattr(r.trend, rank_by), r.player_id))
    return rows
