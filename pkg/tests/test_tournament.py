import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussgolf.errors import ValidationError
from gaussgolf.rng import stream
from gaussgolf.tournament import (
    SimPlayer,
    TournamentConfig,
    field_hash,
    longest_run,
    reconstructed_field,
    simulate_career,
    simulate_tournament,
    streak_probability_oracle,
    sweep_mu_z,
)


def brute_run(flags):
    best = cur = 0
    for f in flags:
        cur = cur + 1 if f else 0
        best = max(best, cur)
    return best


def brute_streak(p, n, k):
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=n):
        if brute_run(outcome) >= k:
            wins = sum(outcome)
            total += p**wins * (1 - p) ** (n - wins)
    return total


@given(st.lists(st.booleans(), max_size=60))
def test_longest_run(flags):
    assert longest_run(np.array(flags, dtype=bool)) == brute_run(flags)


def test_streak_oracle_examples():
    assert streak_probability_oracle(1.0, 300, 11) == 1.0
    assert streak_probability_oracle(0.0, 300, 11) == 0.0
    assert streak_probability_oracle(0.5, 11, 11) == 0.5**11
    assert streak_probability_oracle(0.5, 12, 11) == 3 / 4096


@pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
@pytest.mark.parametrize("p", [0.1, 0.37, 0.5, 0.9])
def test_streak_oracle_matches_enumeration(n, p):
    for k in range(1, n + 1):
        assert abs(streak_probability_oracle(p, n, k) - brute_streak(p, n, k)) < 1e-12


def test_streak_oracle_k_one():
    # P(at least one win)
    assert streak_probability_oracle(0.2, 10, 1) == pytest.approx(1 - 0.8**10, abs=1e-15)


@pytest.mark.parametrize("args", [(-0.1, 10, 2), (1.1, 10, 2), (0.5, 10, 0), (0.5, 10, 11)])
def test_streak_oracle_rejects(args):
    with pytest.raises(ValidationError):
        streak_probability_oracle(*args)


def test_reconstructed_field():
    f = reconstructed_field()
    assert len(f) == 155
    mus = [p.mu_z for p in f]
    assert mus == sorted(mus)
    assert mus[0] == pytest.approx(0.0023 * (2 - 125))
    assert mus[-1] == pytest.approx(0.0023 * (156 - 125))
    assert all(p.sigma_z == 1.0 for p in f)
    assert field_hash(f) == field_hash(reconstructed_field())
    assert field_hash(f) != field_hash(reconstructed_field(sigma_z=0.9))


def test_single_player_always_wins():
    cfg = TournamentConfig((SimPlayer("solo", 0.3, 1.0),))
    gen = stream(1)
    for _ in range(20):
        assert simulate_tournament(cfg, gen).winner_id == "solo"


def test_tournament_totals_and_validation():
    cfg = TournamentConfig((SimPlayer("a", 0.0, 0.0), SimPlayer("b", 1.0, 0.0)), rounds=4)
    res = simulate_tournament(cfg, stream(0))
    assert res.totals == {"a": 0.0, "b": 4.0}
    assert res.winner_id == "a"
    with pytest.raises(ValidationError):
        TournamentConfig(())
    with pytest.raises(ValidationError):
        TournamentConfig((SimPlayer("a", 0.0),), rounds=0)
    with pytest.raises(ValidationError):
        SimPlayer("a", 0.0, -1.0)


def test_tie_resolved_by_playoff():
    # zero spread: every tournament is a three-way tie
    cfg = TournamentConfig(tuple(SimPlayer(p, 0.0, 0.0) for p in "abc"))
    gen = stream(3)
    winners = [simulate_tournament(cfg, gen).winner_id for _ in range(3000)]
    for p in "abc":
        assert abs(winners.count(p) / 3000 - 1 / 3) < 3 * math.sqrt((1 / 3) * (2 / 3) / 3000) + 0.01
    again = stream(3)
    assert winners[:50] == [simulate_tournament(cfg, again).winner_id for _ in range(50)]


def test_dominant_player():
    field = [SimPlayer(f"F{i}", 0.0, 1.0) for i in range(20)]
    res = simulate_career(field, SimPlayer("x", -100.0, 1.0), tournaments=100, careers=100, master_seed=2)
    assert res.win_probability >= 0.9999


def test_two_identical_players():
    # 20 seeds x 10^4 tournaments
    rates = [
        simulate_career([SimPlayer("a", 0.2, 0.9)], SimPlayer("b", 0.2, 0.9), tournaments=100, careers=100,
                        master_seed=s).win_probability
        for s in range(20)
    ]
    assert abs(np.mean(rates) - 0.5) <= 3 * math.sqrt(0.25 / 200_000)


def test_exchangeable_field():
    m = 156
    field = [SimPlayer(f"F{i:03d}", 0.0, 1.0) for i in range(m - 1)]
    res = simulate_career(field, SimPlayer("x", 0.0, 1.0), tournaments=100, careers=200, master_seed=8)
    n = 100 * 200
    assert abs(res.win_probability - 1 / m) <= 3 * math.sqrt((1 / m) * (1 - 1 / m) / n)


def test_career_result_fields():
    field = reconstructed_field()[:30]
    res = simulate_career(field, SimPlayer("x", -1.0, 0.85), tournaments=50, careers=40, k=3, master_seed=1)
    assert res.careers == 40 and res.tournaments_per_career == 50 and res.k == 3
    assert res.win_probability == res.total_wins / 2000
    assert res.prob_streak_ge_k == res.streak_careers / 40
    p, q = res.win_probability, res.prob_streak_ge_k
    assert res.mc_stderr_win == pytest.approx(math.sqrt(p * (1 - p) / 2000))
    assert res.mc_stderr_streak == pytest.approx(math.sqrt(q * (1 - q) / 40))
    assert res.field_hash == field_hash(field)


def test_career_deterministic_across_workers():
    field = reconstructed_field()[:40]
    x = SimPlayer("x", -1.2, 0.85)
    runs = [simulate_career(field, x, tournaments=60, careers=37, k=4, master_seed=99, workers=w) for w in (1, 3, 8)]
    assert runs[0] == runs[1] == runs[2]
    assert simulate_career(field, x, tournaments=60, careers=37, k=4, master_seed=100) != runs[0]


def test_career_validation():
    field = reconstructed_field()[:5]
    x = SimPlayer("x", 0.0)
    for kw in ({"tournaments": 0}, {"careers": 0}, {"k": 0}):
        with pytest.raises(ValidationError):
            simulate_career(field, x, **kw)
    with pytest.raises(ValidationError):
        simulate_career([], x)


def test_sweep_monotone():
    field = reconstructed_field()
    res = sweep_mu_z(field, 0.85, [-0.5, -1.0, -1.5], tournaments=100, careers=30, master_seed=6)
    wins = [r.win_probability for r in res]
    assert wins[0] < wins[1] < wins[2]
    assert [r.mu_z_fictitious for r in res] == [-0.5, -1.0, -1.5]


def test_sweep_symmetric_field():
    field = [SimPlayer(f"F{i:03d}", 0.0, 1.0) for i in range(155)]
    (res,) = sweep_mu_z(field, 1.0, [0.0], tournaments=100, careers=200, master_seed=12)
    n = 100 * 200
    assert abs(res.win_probability - 1 / 156) <= 3 * math.sqrt((1 / 156) * (155 / 156) / n)


def test_sweep_rejects_empty():
    with pytest.raises(ValidationError):
        sweep_mu_z(reconstructed_field(), 0.85, [])
    with pytest.raises(ValidationError):
        sweep_mu_z([], 0.85, [-1.0])


def test_streak_tally_matches_oracle_small():
    # Short careers make streaks common enough to test with few careers.
    field = reconstructed_field()
    res = simulate_career(field, SimPlayer("x", -1.6, 0.85), tournaments=30, careers=2000, k=3, master_seed=21)
    exact = streak_probability_oracle(res.win_probability, 30, 3)
    se = max(res.mc_stderr_streak, math.sqrt(exact * (1 - exact) / res.careers))
    assert abs(res.prob_streak_ge_k - exact) <= 4 * se
