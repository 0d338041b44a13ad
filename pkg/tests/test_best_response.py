import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cumg.best_response import (LinearProgram, LPError, best_response,
                                build_cvar_lp, build_md_lp, build_msd_lp,
                                epsilon_dre_gap, full_profile, project_simplex,
                                solve_lp, supergradient_ascent)
from cumg.closed_forms import coordination_game
from cumg.game_model import SampledGame
from cumg.risk_measures import RiskSpec, rho_profile


def rand_game(rng, ns=(2, 2), K=5):
    payoffs = [[rng.uniform(0, 1, size=tuple(ns)) for _ in range(K)]
               for _ in range(2)]
    w = rng.dirichlet(np.ones(K))
    return SampledGame(payoffs, w)


ALL_SPECS = [RiskSpec("mean"), RiskSpec("msd", gamma=0.6),
             RiskSpec("md", gamma=0.35),
             RiskSpec("cvar", gamma=0.7, cvar_level=0.3)]


# --- dense simplex ----------------------------------------------------------

def test_lp_frozen_inequality():
    # max 3x + 2y  s.t.  x + y <= 4,  x - y <= 2,  x,y >= 0
    lp = LinearProgram([3.0, 2.0], [[1.0, 1.0], [1.0, -1.0]], [4.0, 2.0],
                       ["<=", "<="], [0.0, 0.0], [np.inf, np.inf])
    sol = solve_lp(lp)
    assert np.allclose(sol.x, [3.0, 1.0], atol=1e-10)
    assert abs(sol.value - 11.0) <= 1e-10
    assert np.allclose(sol.duals, [2.5, 0.5], atol=1e-10)
    assert abs(sol.gap) <= 1e-10


def test_lp_equality_and_upper_bound():
    # max 2x + y  s.t.  x + y = 1,  x in [0, 0.6],  y free
    # y stationarity pins the row dual at 1; x rides its upper bound.
    lp = LinearProgram([2.0, 1.0], [[1.0, 1.0]], [1.0], ["="],
                       [0.0, -np.inf], [0.6, np.inf])
    sol = solve_lp(lp)
    assert np.allclose(sol.x, [0.6, 0.4], atol=1e-10)
    assert abs(sol.value - 1.6) <= 1e-10
    assert abs(sol.duals[0] - 1.0) <= 1e-10
    assert abs(sol.reduced_costs[0] - 1.0) <= 1e-10   # 2 - dual
    assert abs(sol.reduced_costs[1]) <= 1e-10


def test_lp_free_variable():
    # max y  s.t.  y <= -3,  y free
    lp = LinearProgram([1.0], [[1.0]], [-3.0], ["<="], [-np.inf], [np.inf])
    sol = solve_lp(lp)
    assert abs(sol.x[0] + 3.0) <= 1e-10
    assert abs(sol.value + 3.0) <= 1e-10
    assert abs(sol.duals[0] - 1.0) <= 1e-10


def test_lp_two_sided_bounds():
    # max -x + y  s.t.  x + y <= 3,  x in [1, 2],  y in [0, 5]
    lp = LinearProgram([-1.0, 1.0], [[1.0, 1.0]], [3.0], ["<="],
                       [1.0, 0.0], [2.0, 5.0])
    sol = solve_lp(lp)
    assert np.allclose(sol.x, [1.0, 2.0], atol=1e-10)
    assert abs(sol.value - 1.0) <= 1e-10


def test_lp_infeasible_raises():
    lp = LinearProgram([1.0], [[1.0]], [-1.0], ["<="], [0.0], [np.inf])
    with pytest.raises(LPError):
        solve_lp(lp)


def test_lp_unbounded_raises():
    lp = LinearProgram([1.0], [[-1.0]], [0.0], ["<="], [-np.inf], [np.inf])
    with pytest.raises(LPError):
        solve_lp(lp)


def test_lp_validation():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0], ["<="], [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], [1.0], [">="], [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], [1.0], ["<="], [2.0], [1.0])


def test_lp_random_duality_and_complementarity():
    rng = np.random.default_rng(7)
    for _ in range(40):
        m, n = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0, 1, n)
        b = A @ x0 + rng.uniform(0.1, 1.0, m)          # strictly feasible
        c = rng.normal(size=n)
        lp = LinearProgram(c, A, b, ["<="] * m, np.zeros(n), np.ones(n))
        sol = solve_lp(lp)
        assert abs(sol.gap) <= 1e-8
        assert np.all(A @ sol.x <= b + 1e-8)
        assert np.all(sol.x >= -1e-10) and np.all(sol.x <= 1.0 + 1e-10)
        assert np.all(sol.duals >= -1e-10)
        slack = b - A @ sol.x
        assert np.max(np.abs(sol.duals * slack)) <= 1e-8


# --- best-response LPs ------------------------------------------------------

def test_builder_validation():
    rng = np.random.default_rng(0)
    g = rand_game(rng)
    opp = [np.array([0.5, 0.5])]
    with pytest.raises(ValueError):
        build_msd_lp(g, 0, opp, 1.5)
    with pytest.raises(ValueError):
        build_md_lp(g, 0, opp, 0.6)
    with pytest.raises(ValueError):
        build_cvar_lp(g, 0, opp, 0.5, 1.0)
    with pytest.raises(ValueError):
        best_response(g, 0, opp, RiskSpec("msd_p", gamma=0.5, p_order=2.0))


def test_full_profile_inserts_placeholder():
    rng = np.random.default_rng(1)
    g = rand_game(rng, ns=(2, 3))
    prof = full_profile(g, 1, [np.array([0.3, 0.7])])
    assert np.allclose(prof[0], [0.3, 0.7])
    assert np.allclose(prof[1], [1 / 3] * 3)
    with pytest.raises(ValueError):
        full_profile(g, 0, [])


def test_best_response_beats_fine_grid():
    # n=2 lets the whole strategy simplex be swept densely; the LP optimum
    # must dominate every grid point and sit within one grid cell of the max.
    rng = np.random.default_rng(11)
    ts = np.linspace(0.0, 1.0, 4001)
    for trial in range(6):
        g = rand_game(rng, ns=(2, 2), K=6)
        opp = [rng.dirichlet(np.ones(2))]
        for spec in ALL_SPECS:
            br = best_response(g, 0, opp, spec)
            vals = np.array([
                rho_profile(g, 0, [np.array([t, 1 - t]), opp[0]], spec)
                for t in ts])
            assert vals.max() <= br.value + 1e-9
            assert br.value - vals.max() <= 1e-3
            v_at_br = rho_profile(g, 0, [br.strategy, opp[0]], spec)
            assert abs(v_at_br - br.value) <= 1e-9


def test_best_response_value_equals_game_value_dual():
    rng = np.random.default_rng(23)
    for trial in range(10):
        g = rand_game(rng, ns=(int(rng.integers(2, 4)), int(rng.integers(2, 4))),
                      K=int(rng.integers(2, 7)))
        opp = [rng.dirichlet(np.ones(g.action_counts[1]))]
        for spec in ALL_SPECS:
            br = best_response(g, 0, opp, spec)
            assert abs(br.value - br.multipliers["game_value"]) <= 1e-8


def test_support_actions_hit_game_value():
    # beta_l = game_value - v_l >= 0 with equality on the support.
    rng = np.random.default_rng(31)
    for trial in range(10):
        g = rand_game(rng, ns=(3, 2), K=5)
        opp = [rng.dirichlet(np.ones(2))]
        for spec in ALL_SPECS:
            br = best_response(g, 0, opp, spec)
            beta = br.multipliers["beta"]
            assert np.all(beta >= -1e-9)
            support = br.strategy > 1e-8
            assert np.max(np.abs(beta[support])) <= 1e-7
            assert abs(br.strategy @ beta) <= 1e-8


def test_multiplier_boxes():
    rng = np.random.default_rng(43)
    for trial in range(8):
        g = rand_game(rng, ns=(2, 3), K=6)
        opp = [rng.dirichlet(np.ones(3))]
        w = g.sample_weights

        br = best_response(g, 0, opp, RiskSpec("msd", gamma=0.7))
        lam = br.multipliers["lambda"]
        assert np.all(lam >= -1e-9)
        assert np.all(lam <= 0.7 * w + 1e-9)

        br = best_response(g, 0, opp, RiskSpec("md", gamma=0.4))
        lp_, lm_ = br.multipliers["lambda_plus"], br.multipliers["lambda_minus"]
        assert np.all(lp_ >= -1e-9) and np.all(lm_ >= -1e-9)
        assert np.allclose(lp_ + lm_, 0.4 * w, atol=1e-8)

        br = best_response(g, 0, opp, RiskSpec("cvar", gamma=0.6, cvar_level=0.25))
        lam = br.multipliers["lambda"]
        assert np.all(lam >= -1e-9)
        assert np.all(lam <= (0.6 / 0.25) * w + 1e-9)
        assert abs(lam.sum() - 0.6) <= 1e-8


def test_gamma_zero_collapses_to_mean():
    rng = np.random.default_rng(5)
    g = rand_game(rng, ns=(3, 3), K=4)
    opp = [rng.dirichlet(np.ones(3))]
    v_mean = best_response(g, 0, opp, RiskSpec("mean")).value
    for spec in [RiskSpec("msd", gamma=0.0), RiskSpec("md", gamma=0.0),
                 RiskSpec("cvar", gamma=0.0, cvar_level=0.4)]:
        assert abs(best_response(g, 0, opp, spec).value - v_mean) <= 1e-10


# --- improvement gaps -------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_gap_nonnegative(seed):
    rng = np.random.default_rng(seed)
    g = rand_game(rng, ns=(2, 2), K=3)
    profile = [rng.dirichlet(np.ones(2)) for _ in range(2)]
    specs = [ALL_SPECS[int(rng.integers(len(ALL_SPECS)))] for _ in range(2)]
    gaps = epsilon_dre_gap(g, profile, specs)
    assert np.all(gaps >= -1e-9)


def test_gap_zero_at_coordination_center():
    # p_hat = 1/2: against an opponent at (1/2, 1/2) every own strategy earns
    # exactly 1/2 under msd, so the centre profile has zero gap.
    g = coordination_game(0.5)
    spec = RiskSpec("msd", gamma=0.5)
    c = np.array([0.5, 0.5])
    gaps = epsilon_dre_gap(g, [c, c], [spec, spec])
    assert np.max(np.abs(gaps)) <= 1e-10


def test_gap_zero_at_aligned_pure_profile():
    # p_hat = 0.7 > threshold(0.2) ~ 0.5495: both players on action 0.
    g = coordination_game(0.7)
    spec = RiskSpec("msd", gamma=0.2)
    e0 = np.array([1.0, 0.0])
    gaps = epsilon_dre_gap(g, [e0, e0], [spec, spec])
    assert np.max(np.abs(gaps)) <= 1e-10


def test_gap_requires_one_spec_per_player():
    g = coordination_game(0.5)
    with pytest.raises(ValueError):
        epsilon_dre_gap(g, [np.array([0.5, 0.5])] * 2, [RiskSpec("mean")])


# --- simplex projection -----------------------------------------------------

def test_project_simplex_known_points():
    assert np.allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    assert np.allclose(project_simplex(np.array([0.5, 0.5, -1.0])),
                       [0.5, 0.5, 0.0])
    assert np.allclose(project_simplex(np.array([0.3, 0.3])), [0.5, 0.5])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6),
       st.integers(0, 10 ** 6))
def test_project_simplex_is_projection(v, seed):
    v = np.asarray(v)
    p = project_simplex(v)
    assert np.all(p >= -1e-12)
    assert abs(p.sum() - 1.0) <= 1e-9
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(v.size))
    assert np.linalg.norm(p - v) <= np.linalg.norm(x - v) + 1e-9


def test_project_simplex_fixes_simplex_points():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.dirichlet(np.ones(int(rng.integers(2, 6))))
        assert np.allclose(project_simplex(x), x, atol=1e-12)


# --- independent ascent oracle ---------------------------------------------

def test_supergradient_matches_lp_smoke():
    # Full 100-seed-per-measure agreement lives in the acceptance suite;
    # this keeps a fast cross-check in the unit tier.
    specs = [RiskSpec("msd", gamma=0.8), RiskSpec("md", gamma=0.4),
             RiskSpec("cvar", gamma=0.7, cvar_level=0.3)]
    for s in range(4):
        rng = np.random.default_rng(1000 + s)
        g = rand_game(rng, ns=(3, 2), K=5)
        opp = [rng.dirichlet(np.ones(2))]
        for spec in specs:
            br = best_response(g, 0, opp, spec)
            sg = supergradient_ascent(g, 0, opp, spec, steps=20000, seed=s)
            assert abs(br.value - sg.value) <= 1e-5
            assert sg.value <= br.value + 1e-9     # sound lower bound


def test_supergradient_deterministic():
    rng = np.random.default_rng(77)
    g = rand_game(rng, ns=(2, 2), K=4)
    opp = [np.array([0.4, 0.6])]
    spec = RiskSpec("msd", gamma=0.5)
    a = supergradient_ascent(g, 0, opp, spec, steps=500, seed=9)
    b = supergradient_ascent(g, 0, opp, spec, steps=500, seed=9)
    assert a.value == b.value
    assert np.array_equal(a.strategy, b.strategy)
