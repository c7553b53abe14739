"""Monte Carlo tournaments, careers and win streaks on the z-score scale.

Each player's round is a Normal(mu_z, sigma_z^2) draw; the lowest
four-round total wins. A career is a run of independent tournaments
against a fixed field, tallying total wins and the longest winning run.

Career ``i`` always draws from ``stream(master_seed, i)``, so results are
bit-identical for any worker count. Grid points of a sweep reuse the same
streams (common random numbers), which keeps the sweep monotone in mu_z.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gaussgolf import rng as _rng
from gaussgolf.errors import ValidationError

FICTITIOUS_ID = "fictitious"
DEFAULT_FIELD_SLOPE = 0.0023
DEFAULT_FIELD_CUT_RANK = 125
DEFAULT_FIELD_SIZE = 155
DEFAULT_FIELD_SIGMA_Z = 1.0
DEFAULT_FICTITIOUS_SIGMA_Z = 0.85
NELSON_RECORD = 11


@dataclass(frozen=True)
class SimPlayer:
    player_id: str
    mu_z: float
    sigma_z: float = DEFAULT_FIELD_SIGMA_Z

    def __post_init__(self):
        if not self.sigma_z >= 0:
            raise ValidationError(f"sigma_z must be >= 0 for {self.player_id!r}")


@dataclass(frozen=True)
class TournamentConfig:
    field: tuple[SimPlayer, ...]
    rounds: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.field:
            raise ValidationError("tournament field is empty")
        if self.rounds < 1:
            raise ValidationError("rounds must be >= 1")


@dataclass(frozen=True)
class TournamentResult:
    winner_id: str
    totals: dict[str, float] = field(repr=False)


@dataclass(frozen=True)
class CareerSimResult:
    mu_z_fictitious: float
    sigma_z_fictitious: float
    win_probability: float
    prob_streak_ge_k: float
    k: int
    tournaments_per_career: int
    careers: int
    mc_stderr_win: float
    mc_stderr_streak: float
    total_wins: int
    streak_careers: int
    field_hash: str
    seed: int


def reconstructed_field(
    slope: float = DEFAULT_FIELD_SLOPE,
    cut_rank: int = DEFAULT_FIELD_CUT_RANK,
    size: int = DEFAULT_FIELD_SIZE,
    sigma_z: float = DEFAULT_FIELD_SIGMA_Z,
    ranks: range = range(2, 201),
) -> list[SimPlayer]:
    """Synthetic field from a linear money-list fit.

    Players at ``ranks`` get ``mu_z = slope * (rank - cut_rank)``; the best
    ``size`` of them by mu_z make up the field.
    """
    players = [SimPlayer(f"R{r:03d}", slope * (r - cut_rank), sigma_z) for r in ranks]
    players.sort(key=lambda p: (p.mu_z, p.player_id))
    return players[:size]


def field_hash(players: Sequence[SimPlayer]) -> str:
    h = hashlib.sha256()
    for p in players:
        h.update(f"{p.player_id},{p.mu_z!r},{p.sigma_z!r}\n".encode())
    return h.hexdigest()[:16]


def _play(gen: np.random.Generator, mu: np.ndarray, sigma: np.ndarray, rounds: int, n: int):
    """Play ``n`` tournaments; return (winner index per tournament, totals)."""
    z = gen.standard_normal((rounds, n, mu.size))
    totals = rounds * mu + sigma * z.sum(axis=0)
    best = totals.min(axis=1)
    leaders = totals == best[:, None]
    winners = leaders.argmax(axis=1)
    n_lead = leaders.sum(axis=1)
    for t in np.flatnonzero(n_lead > 1):
        # simulated playoff
        pick = int(gen.integers(n_lead[t]))
        winners[t] = np.flatnonzero(leaders[t])[pick]
    return winners, totals


def _field_arrays(players: Sequence[SimPlayer]):
    mu = np.array([p.mu_z for p in players], dtype=np.float64)
    sigma = np.array([p.sigma_z for p in players], dtype=np.float64)
    return mu, sigma


def simulate_tournament(config: TournamentConfig, rng_stream: np.random.Generator | None = None) -> TournamentResult:
    gen = rng_stream if rng_stream is not None else _rng.stream(config.seed)
    mu, sigma = _field_arrays(config.field)
    winners, totals = _play(gen, mu, sigma, config.rounds, 1)
    ids = [p.player_id for p in config.field]
    return TournamentResult(ids[int(winners[0])], dict(zip(ids, totals[0].tolist())))


def longest_run(flags: np.ndarray) -> int:
    """Length of the longest run of True values."""
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        return 0
    padded = np.concatenate(([False], flags, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return int((edges[1::2] - edges[::2]).max())


def _career_block(start, stop, mu, sigma, rounds, tournaments, k, seed, fict):
    wins = 0
    streaks = 0
    for c in range(start, stop):
        winners, _ = _play(_rng.stream(seed, _rng.TAG_CAREER, c), mu, sigma, rounds, tournaments)
        won = winners == fict
        wins += int(won.sum())
        streaks += longest_run(won) >= k
    return wins, streaks


def _check_career_args(tournaments, careers, k):
    if tournaments < 1 or careers < 1 or k < 1:
        raise ValidationError("tournaments, careers and k must all be >= 1")


def simulate_career(
    field: Sequence[SimPlayer],
    fictitious: SimPlayer,
    tournaments: int = 300,
    careers: int = 10_000,
    k: int = NELSON_RECORD,
    master_seed: int = 0,
    rounds: int = 4,
    workers: int = 1,
) -> CareerSimResult:
    """Estimate per-tournament win rate and P(longest win streak >= k)."""
    _check_career_args(tournaments, careers, k)
    if not field:
        raise ValidationError("tournament field is empty")
    players = list(field) + [fictitious]
    TournamentConfig(tuple(players), rounds, master_seed)  # validates
    mu, sigma = _field_arrays(players)
    fict = len(players) - 1

    workers = max(1, min(workers, careers))
    bounds = np.linspace(0, careers, workers + 1).astype(int)
    blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    args = (mu, sigma, rounds, tournaments, k, master_seed, fict)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(lambda b: _career_block(*b, *args), blocks))
    else:
        tallies = [_career_block(*b, *args) for b in blocks]
    wins = sum(w for w, _ in tallies)
    streaks = sum(s for _, s in tallies)

    n_t = careers * tournaments
    p_win = wins / n_t
    p_streak = streaks / careers
    return CareerSimResult(
        mu_z_fictitious=fictitious.mu_z,
        sigma_z_fictitious=fictitious.sigma_z,
        win_probability=p_win,
        prob_streak_ge_k=p_streak,
        k=k,
        tournaments_per_career=tournaments,
        careers=careers,
        mc_stderr_win=math.sqrt(p_win * (1 - p_win) / n_t),
        mc_stderr_streak=math.sqrt(p_streak * (1 - p_streak) / careers),
        total_wins=wins,
        streak_careers=streaks,
        field_hash=field_hash(field),
        seed=master_seed,
    )


def sweep_mu_z(
    field: Sequence[SimPlayer],
    sigma_z_fictitious: float,
    mu_z_grid: Sequence[float],
    tournaments: int = 300,
    careers: int = 10_000,
    k: int = NELSON_RECORD,
    master_seed: int = 0,
    rounds: int = 4,
    workers: int = 1,
) -> list[CareerSimResult]:
    if len(mu_z_grid) == 0:
        raise ValidationError("mu_z grid is empty")
    if not field:
        raise ValidationError("tournament field is empty")
    return [
        simulate_career(
            field,
            SimPlayer(FICTITIOUS_ID, float(m), sigma_z_fictitious),
            tournaments=tournaments,
            careers=careers,
            k=k,
            master_seed=master_seed,
            rounds=rounds,
            workers=workers,
        )
        for m in mu_z_grid
    ]


def streak_probability_oracle(p_win: float, n: int, k: int) -> float:
    """Exact P(some run of >= k successes) in ``n`` Bernoulli(p_win) trials.

    Dynamic programming over the current run length; a run reaching ``k``
    is absorbed.
    """
    if not 0.0 <= p_win <= 1.0:
        raise ValidationError(f"p_win must lie in [0, 1], got {p_win}")
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    q = 1.0 - p_win
    state = np.zeros(k)  # state[j]: no run >= k yet, current run length j
    state[0] = 1.0
    hit = 0.0
    for _ in range(n):
        hit += state[k - 1] * p_win
        nxt = np.empty(k)
        nxt[0] = state.sum() * q
        nxt[1:] = state[:-1] * p_win
        state = nxt
    return min(1.0, hit)
