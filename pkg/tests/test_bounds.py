import numpy as np
import pytest

from cumg.bounds import (BoundInputs, CoverageResult, approx_loss_B,
                         coverage_experiment, cvar_bound_dependent,
                         cvar_bound_fixed, excess_suboptimality_bound,
                         hoeffding_mean_bound, mad_bound_dependent,
                         mad_bound_fixed, population_statistics)
from cumg.closed_forms import coordination_game
from cumg.game_model import SampledGame
from cumg.risk_measures import RiskSpec

E0 = np.array([1.0, 0.0])


# --- frozen values ------------------------------------------------------------

def test_hoeffding_frozen():
    # sqrt(ln(16 / 0.1) / 200)
    assert abs(hoeffding_mean_bound(100, 0.1, num_profiles=4)
               - 0.15929805107461023) <= 1e-12
    assert abs(hoeffding_mean_bound(100, 0.1)
               - np.sqrt(np.log(40.0) / 200.0)) <= 1e-15


def test_mad_fixed_frozen():
    # sqrt(2 ln 40 / 400) + sqrt(0.25 / 400)
    want = np.sqrt(2.0 * np.log(40.0) / 400.0) + 0.025
    assert abs(mad_bound_fixed(400, 0.05, 0.25) - want) <= 1e-15
    assert abs(want - 0.16081015157406195) <= 1e-12


def test_cvar_fixed_frozen():
    # (1 / 0.25) sqrt(ln 40 / 400)
    want = 4.0 * np.sqrt(np.log(40.0) / 400.0)
    assert abs(cvar_bound_fixed(200, 0.05, 0.25) - want) <= 1e-15
    assert abs(want - 0.38412911652796833) <= 1e-12


# --- structural identities ------------------------------------------------------

def test_dependent_reduces_to_fixed_at_zero_overlap():
    for K in (10, 50, 400):
        assert abs(mad_bound_dependent(K, 0.05, 0.3, 0.0)
                   - mad_bound_fixed(K, 0.05, 0.3)) <= 1e-15
        assert abs(cvar_bound_dependent(K, 0.05, 0.25, 0.0)
                   - (1.0 + cvar_bound_fixed(K, 0.05, 0.25))) <= 1e-12


def test_zero_variance_drops_sampling_term():
    assert abs(mad_bound_fixed(100, 0.1, 0.0)
               - np.sqrt(2.0 * np.log(20.0) / 100.0)) <= 1e-15


def test_bounds_monotone_in_K_and_delta():
    Ks = [10, 20, 50, 100, 500, 2000]
    for a, b in zip(Ks, Ks[1:]):
        assert hoeffding_mean_bound(b, 0.1) < hoeffding_mean_bound(a, 0.1)
        assert mad_bound_fixed(b, 0.1, 0.25) < mad_bound_fixed(a, 0.1, 0.25)
        assert cvar_bound_fixed(b, 0.1, 0.3) < cvar_bound_fixed(a, 0.1, 0.3)
    deltas = [0.2, 0.1, 0.05, 0.01]
    for a, b in zip(deltas, deltas[1:]):
        assert hoeffding_mean_bound(100, b) > hoeffding_mean_bound(100, a)
        assert mad_bound_fixed(100, b, 0.25) > mad_bound_fixed(100, a, 0.25)
        assert cvar_bound_fixed(100, b, 0.3) > cvar_bound_fixed(100, a, 0.3)


def test_hoeffding_grows_with_profile_count():
    a = hoeffding_mean_bound(100, 0.1, num_profiles=1)
    b = hoeffding_mean_bound(100, 0.1, num_profiles=16)
    assert b > a


def test_cvar_dependent_never_below_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        K = int(rng.integers(1, 10 ** 4))
        delta = float(rng.uniform(0.001, 0.5))
        lvl = float(rng.uniform(0.05, 0.95))
        dK = float(rng.uniform(0, 1))
        assert cvar_bound_dependent(K, delta, lvl, dK) >= 1.0


def test_full_overlap_grows_with_root_K():
    # delta_K = 1 keeps the dependent mad bound from shrinking: ~ sqrt(K)
    vals = [mad_bound_dependent(K, 0.1, 0.25, 1.0) for K in (100, 400, 1600)]
    assert vals[1] > vals[0] and vals[2] > vals[1]
    assert vals[2] / vals[1] > 1.5        # sqrt(4) asymptotically


def test_validation():
    with pytest.raises(ValueError):
        hoeffding_mean_bound(0, 0.1)
    with pytest.raises(ValueError):
        hoeffding_mean_bound(10, 1.5)
    with pytest.raises(ValueError):
        mad_bound_fixed(10, 0.1, -0.2)
    with pytest.raises(ValueError):
        mad_bound_dependent(10, 0.1, 0.2, 1.4)
    with pytest.raises(ValueError):
        cvar_bound_fixed(10, 0.1, 0.0)
    with pytest.raises(ValueError):
        BoundInputs(K=10, delta=0.1, delta_K=2.0)
    with pytest.raises(ValueError):
        BoundInputs(K=10, delta=0.1, gamma=-0.5)


# --- excess-suboptimality assembly ---------------------------------------------

def test_approx_loss_msd_md_by_hand():
    inputs = BoundInputs(K=100, delta=0.1, delta_K=0.2, variance=0.25,
                         mad_true=0.4)
    core = 0.4 + np.sqrt(0.25 / 100) \
        + np.sqrt(2 * np.log(20.0) / 100) * (1 + 99 * 0.2)
    assert abs(approx_loss_B(RiskSpec("msd", gamma=0.5), inputs)
               - 0.5 * core) <= 1e-12
    assert abs(approx_loss_B(RiskSpec("md", gamma=0.4), inputs)
               - core) <= 1e-12
    assert approx_loss_B(RiskSpec("mean"), inputs) == 0.0


def test_approx_loss_cvar_by_hand():
    inputs = BoundInputs(K=200, delta=0.05, num_profiles=4, delta_K=0.1,
                         mean_true=0.6, cvar_true=0.3)
    spec = RiskSpec("cvar", gamma=0.7, cvar_level=0.25)
    coef = 0.1 / 0.25 + (1 + 199 * 0.1) / (0.25 * 200)
    want = 0.6 + np.sqrt(np.log(16 / 0.05) / 400) + 0.3 + 1.0 \
        + coef * np.sqrt(100 * np.log(4 / 0.05))
    assert abs(approx_loss_B(spec, inputs) - want) <= 1e-12


def test_approx_loss_uses_population_stats_over_fields():
    inputs = BoundInputs(K=100, delta=0.1, variance=0.25, mad_true=0.4)
    a = approx_loss_B(RiskSpec("msd", gamma=0.5), inputs)
    b = approx_loss_B(RiskSpec("msd", gamma=0.5), inputs,
                      population_stats={"mad": 0.1, "variance": 0.25})
    assert b < a
    with pytest.raises(ValueError):
        approx_loss_B(RiskSpec("msd", gamma=0.5),
                      BoundInputs(K=100, delta=0.1, variance=0.25))


def test_approx_loss_rejects_msd_p():
    inputs = BoundInputs(K=100, delta=0.1)
    with pytest.raises(ValueError):
        approx_loss_B(RiskSpec("msd_p", gamma=0.5, p_order=2.0), inputs)


def test_excess_bound_gamma_zero_is_hoeffding_only():
    inputs = BoundInputs(K=150, delta=0.1, num_profiles=8)
    want = 2.0 * hoeffding_mean_bound(150, 0.1, num_profiles=8)
    assert abs(excess_suboptimality_bound(RiskSpec("mean"), inputs)
               - want) <= 1e-15
    assert abs(excess_suboptimality_bound(RiskSpec("msd", gamma=0.0), inputs)
               - want) <= 1e-15


def test_excess_bound_vanishing_gamma_risk_term():
    # gamma ~ 1/K: the risk part gamma * B dies while Hoeffding dominates
    stats = {"mad": 0.25, "variance": 0.2}
    for K, cap in [(100, 0.1), (10 ** 4, 1e-3), (10 ** 6, 1e-5)]:
        inputs = BoundInputs(K=K, delta=0.1)
        spec = RiskSpec("msd", gamma=min(1.0, 10.0 / K))
        excess = excess_suboptimality_bound(spec, inputs, stats)
        base = 2.0 * hoeffding_mean_bound(K, 0.1)
        assert excess - base <= cap


# --- population statistics and coverage ------------------------------------------

def test_population_statistics_exact():
    g = coordination_game(0.6)
    stats = population_statistics(g, 0, [E0, E0], cvar_level=0.3)
    assert abs(stats["mean"] - 0.6) <= 1e-15
    assert abs(stats["variance"] - 0.24) <= 1e-15
    assert abs(stats["mad"] - 0.48) <= 1e-15
    assert abs(stats["cvar"] - 0.0) <= 1e-15
    # full lower tail recovers the mean
    full = population_statistics(g, 0, [E0, E0], cvar_level=1.0 - 1e-12)
    assert abs(full["cvar"] - 0.6) <= 1e-9


def test_coverage_degenerate_truth_is_total():
    const = np.full((2, 2), 0.7)
    g = SampledGame([[const, const], [const, const]], [0.5, 0.5])
    res = coverage_experiment(g, [E0, E0], "mean", K=20, delta=0.1,
                              trials=100, seed=0)
    assert isinstance(res, CoverageResult)
    assert res.coverage == 1.0
    assert res.passed
    assert res.deviations.shape == (100,)
    assert np.all(res.deviations <= 1e-15)


def test_coverage_rejects_out_of_range_payoffs():
    big = np.full((2, 2), 1.7)
    g = SampledGame([[big, big], [big, big]], [0.5, 0.5])
    with pytest.raises(ValueError):
        coverage_experiment(g, [E0, E0], "mean", K=20, delta=0.1,
                            trials=100, seed=0)
    with pytest.raises(ValueError):
        coverage_experiment(coordination_game(0.6), [E0, E0], "median",
                            K=20, delta=0.1, trials=100, seed=0)
    with pytest.raises(ValueError):
        coverage_experiment(coordination_game(0.6), [E0, E0], "mean",
                            K=20, delta=0.1, trials=50, seed=0)


@pytest.mark.parametrize("statistic", ["mean", "mad", "cvar"])
def test_coverage_small_run_passes(statistic):
    res = coverage_experiment(coordination_game(0.6), [E0, E0], statistic,
                              K=50, delta=0.1, trials=200, seed=1)
    assert res.passed
    assert res.coverage >= res.threshold
    assert res.within.sum() == round(res.coverage * res.trials)


def test_coverage_deterministic_in_seed():
    a = coverage_experiment(coordination_game(0.6), [E0, E0], "mean",
                            K=30, delta=0.1, trials=100, seed=7)
    b = coverage_experiment(coordination_game(0.6), [E0, E0], "mean",
                            K=30, delta=0.1, trials=100, seed=7)
    assert np.array_equal(a.deviations, b.deviations)
