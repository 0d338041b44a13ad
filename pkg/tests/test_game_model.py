import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cumg.game_model import (SampledGame, action_cross_matrix,
                             action_payoff_matrix, expected_mixed_payoff,
                             game_from_json, game_to_json, is_normalized,
                             mixed_payoff_per_sample, mixed_payoff_samples,
                             normalize_payoffs, pure_payoff,
                             pure_payoff_samples)


def random_game(rng, m=2, ns=None, K=3):
    ns = ns or [int(rng.integers(2, 4)) for _ in range(m)]
    payoffs = [[rng.uniform(-2, 3, size=tuple(ns)) for _ in range(K)]
               for _ in range(m)]
    w = rng.dirichlet(np.ones(K))
    return SampledGame(payoffs, w)


def brute_mixed_payoff(game, player, profile, sample):
    total = 0.0
    for actions in itertools.product(*[range(n) for n in game.action_counts]):
        prob = np.prod([profile[i][a] for i, a in enumerate(actions)])
        total += prob * game.payoffs[player][sample][actions]
    return total


def test_constructor_validation():
    a = np.zeros((2, 2))
    with pytest.raises(ValueError):
        SampledGame([[a]], [1.0])                      # one player
    with pytest.raises(ValueError):
        SampledGame([[a], [a]], [0.5])                 # weights off
    with pytest.raises(ValueError):
        SampledGame([[a], [a]], [1.5, -0.5])           # negative weight
    with pytest.raises(ValueError):
        SampledGame([[a], [np.zeros(2)]], [1.0])       # wrong rank
    with pytest.raises(ValueError):
        SampledGame([[a], [np.full((2, 2), np.nan)]], [1.0])
    g = SampledGame([[a, a], [a, a]], [0.25, 0.75])
    assert g.num_players == 2 and g.num_samples == 2
    assert tuple(g.action_counts) == (2, 2)


def test_payoffs_match_brute_force():
    rng = np.random.default_rng(0)
    for m in (2, 3):
        game = random_game(rng, m=m)
        profile = [rng.dirichlet(np.ones(n)) for n in game.action_counts]
        for i in range(m):
            for k in range(game.num_samples):
                got = mixed_payoff_per_sample(game, i, profile, k)
                assert got == pytest.approx(
                    brute_mixed_payoff(game, i, profile, k), abs=1e-12)
            vals = mixed_payoff_samples(game, i, profile)
            want = game.sample_weights @ vals
            assert expected_mixed_payoff(game, i, profile) \
                == pytest.approx(want, abs=1e-12)


def test_pure_payoff_is_tensor_entry():
    rng = np.random.default_rng(1)
    game = random_game(rng, m=3)
    actions = tuple(int(rng.integers(n)) for n in game.action_counts)
    for i in range(3):
        assert pure_payoff(game, i, actions, 1) \
            == game.payoffs[i][1][actions]
        vals = pure_payoff_samples(game, i, actions)
        assert vals[2] == game.payoffs[i][2][actions]


def test_action_payoff_matrix_row_identity():
    rng = np.random.default_rng(2)
    game = random_game(rng, m=3)
    profile = [rng.dirichlet(np.ones(n)) for n in game.action_counts]
    for i in range(3):
        U = action_payoff_matrix(game, i, profile)
        assert U.shape == (game.num_samples, game.action_counts[i])
        vals = U @ profile[i]
        want = mixed_payoff_samples(game, i, profile)
        assert np.allclose(vals, want, atol=1e-12)


def test_action_cross_matrix_bilinear_identity():
    rng = np.random.default_rng(3)
    game = random_game(rng, m=3)
    profile = [rng.dirichlet(np.ones(n)) for n in game.action_counts]
    C = action_cross_matrix(game, 0, 2, profile, 1)
    got = profile[0] @ C @ profile[2]
    assert got == pytest.approx(mixed_payoff_per_sample(game, 0, profile, 1),
                                abs=1e-12)


def test_normalization():
    rng = np.random.default_rng(4)
    game = random_game(rng)
    norm, transforms = normalize_payoffs(game)
    assert is_normalized(norm)
    for i in range(2):
        lo, span = transforms[i]
        for k in range(game.num_samples):
            assert np.allclose(lo + span * norm.payoffs[i][k],
                               game.payoffs[i][k], atol=1e-12)
    const = SampledGame([[np.full((2, 2), 3.0)], [np.full((2, 2), 3.0)]],
                        [1.0])
    normed, tr = normalize_payoffs(const)
    assert tr[0] == (3.0, 1.0)          # constant payoffs keep span 1
    assert is_normalized(normed)


def test_json_round_trip():
    rng = np.random.default_rng(5)
    game = random_game(rng, m=3)
    back = game_from_json(game_to_json(game))
    assert back.action_counts == game.action_counts
    assert np.array_equal(back.sample_weights, game.sample_weights)
    for i in range(3):
        for k in range(game.num_samples):
            assert np.array_equal(back.payoffs[i][k], game.payoffs[i][k])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_payoff_linear_in_own_strategy(seed, a):
    rng = np.random.default_rng(seed)
    game = random_game(rng)
    n0, n1 = game.action_counts
    x, y = rng.dirichlet(np.ones(n0)), rng.dirichlet(np.ones(n0))
    opp = rng.dirichlet(np.ones(n1))
    mix = a * x + (1.0 - a) * y
    for k in range(game.num_samples):
        vx = mixed_payoff_per_sample(game, 0, [x, opp], k)
        vy = mixed_payoff_per_sample(game, 0, [y, opp], k)
        vm = mixed_payoff_per_sample(game, 0, [mix, opp], k)
        assert vm == pytest.approx(a * vx + (1.0 - a) * vy, abs=1e-9)
