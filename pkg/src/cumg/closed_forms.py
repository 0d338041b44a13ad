'''Analytic oracles for three small worked games.

Everything here is a pure formula (no solver calls), so these functions can
arbitrate solver bugs:

  * a 2x2 coordination game under two sampled states, solved in closed form
    for the msd measure and for interval ambiguity over the state probability;
  * the pure-equilibrium existence threshold p_bar(gamma_s) of that game;
  * a 2x2 two-sample game whose cvar-mix equilibrium has closed-form strategy,
    value, VaR and variance, with a regime change at cvar_level = 1/2;
  * correlated-equilibrium checks on the interval game, including the
    infinite-support construction that mixes the row player's indifferent
    strategies.
'''

from dataclasses import dataclass

import numpy as np

from .game_model import SampledGame
from .risk_measures import RiskSpec, rho_profile


@dataclass(frozen=True)
class CoordinationParams:
    p_hat: float
    gamma_s: float = 0.0
    interval: tuple = None      # (p_lo, p_hi) for the interval-ambiguity variant

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("p_hat must lie in [0, 1]")
        if not 0.0 <= self.gamma_s <= 1.0:
            raise ValueError("gamma_s must lie in [0, 1]")
        if self.interval is not None:
            lo, hi = self.interval
            if not 0.0 <= lo <= self.p_hat <= hi <= 1.0:
                raise ValueError("interval must satisfy p_lo <= p_hat <= p_hi")


@dataclass(frozen=True)
class CvarExampleParams:
    gamma_c: float
    cvar_level: float

    def __post_init__(self):
        if not 0.0 <= self.gamma_c <= 1.0:
            raise ValueError("gamma_c must lie in [0, 1]")
        if not 0.0 < self.cvar_level < 1.0:
            raise ValueError("cvar_level must lie in (0, 1)")


def coordination_game(p_hat):
    '''Two-sample 2x2 coordination game.

    State A rewards matching on (U,L)/(D,R), state B rewards matching on the
    anti-diagonal; both players score identically.  Sample weights (p_hat,
    1 - p_hat).
    '''
    state_a = np.array([[1.0, 0.0], [0.0, 1.0]])
    state_b = np.array([[0.0, 1.0], [1.0, 0.0]])
    return SampledGame([[state_a, state_b], [state_a, state_b]],
                       [p_hat, 1.0 - p_hat])


def msd_coordination_payoff(p_hat, gamma_s, x1U, x2L):
    '''Either player's msd value on the coordination game.

    With s = (1 - 2 x1U)(1 - 2 x2L):
      rho = 1/2 + ((2 p_hat - 1)/2) s - gamma_s p_hat (1 - p_hat) |s|.
    '''
    s = (1.0 - 2.0 * x1U) * (1.0 - 2.0 * x2L)
    return 0.5 + 0.5 * (2.0 * p_hat - 1.0) * s \
        - gamma_s * p_hat * (1.0 - p_hat) * abs(s)


def drg_interval_payoff(params, x1U, x2L):
    '''Worst-case expected payoff when the state-A probability may sit
    anywhere in params.interval: the interval endpoint is picked against the
    sign of s = (1 - 2 x1U)(1 - 2 x2L).'''
    if params.interval is None:
        raise ValueError("params.interval required")
    lo, hi = params.interval
    s = (1.0 - 2.0 * x1U) * (1.0 - 2.0 * x2L)
    p = lo if s > 0 else hi
    return 0.5 + (p - 0.5) * s


def msd_pure_equilibrium_threshold(gamma_s):
    '''Smallest p_hat above which the aligned pure profiles are msd
    equilibria of the coordination game:

      p_bar = (gamma_s - 1 + sqrt(1 + gamma_s^2)) / (2 gamma_s),

    from requiring p_hat - 1/2 >= gamma_s p_hat (1 - p_hat).  Increasing in
    gamma_s with p_bar(0) = 1/2.  The anti-aligned pure profiles are
    equilibria exactly when p_hat < 1 - p_bar.  Evaluated via the
    rationalized form 1 / (1 - gamma_s + sqrt(1 + gamma_s^2)), which avoids
    the small-gamma_s cancellation and needs no special case at zero.
    '''
    if not 0.0 <= gamma_s <= 1.0:
        raise ValueError("gamma_s must lie in [0, 1]")
    return 1.0 / (1.0 - gamma_s + np.sqrt(1.0 + gamma_s ** 2))


# --- cvar example ------------------------------------------------------------

def cvar_example_game():
    '''Two-sample 2x2 game with a cvar-sensitive row player.

    Player 1's payoffs differ across the two equally likely samples only in
    the (top, left) cell (0 vs 2); player 2's payoffs are sample-independent,
    which pins their value at 1.5 against the mixed row strategy.
    '''
    u1_s1 = np.array([[0.0, 0.0], [2.0, -1.0]])
    u1_s2 = np.array([[2.0, 0.0], [2.0, -1.0]])
    u2 = np.array([[3.0, 2.0], [0.0, 1.0]])
    return SampledGame([[u1_s1, u1_s2], [u2, u2]], [0.5, 0.5])


def cvar_example_solution(params):
    '''Closed-form equilibrium of the cvar example.

    Branches at cvar_level 1/2 (both formulas agree there; the >= branch owns
    the boundary).  Returns y1 (column player's first-action probability),
    the row mix x = (1/2, 1/2), the VaR z1 of player 1's payoff, rho1, the
    payoff variance var1, and player 2's value 1.5.
    '''
    g = params.gamma_c
    lvl = params.cvar_level
    if lvl < 0.5:
        y1 = 1.0 / (2.0 + g)
        z1 = 1.5 * y1 - 0.5
        rho1 = (1.0 - g) * y1
    else:
        y1 = lvl / (2.0 * lvl + g * (1.0 - lvl))
        z1 = 2.5 * y1 - 0.5
        rho1 = (2.0 + g * (lvl - 1.0) / (2.0 * lvl)) * y1 - 0.5
    return {
        "y1": y1,
        "y": np.array([y1, 1.0 - y1]),
        "x": np.array([0.5, 0.5]),
        "z1": z1,
        "rho1": rho1,
        "var1": 0.25 * y1 ** 2,
        "value2": 1.5,
    }


# --- correlated-equilibrium checks on the interval game ----------------------

def ce_counterexample_check():
    '''Correlated equilibrium that a mixed deviation beats.

    On the interval game ([0.3, 0.7]) all four pure profiles are worth 0.3,
    so the correlated distribution 1/2 (U,L) + 1/2 (D,R) satisfies every
    pure-deviation inequality with equality; yet whenever player 1 is told U
    or D, switching to the fifty-fifty mix yields 0.5 > 0.3.  Returns the
    two booleans (pure inequalities hold, mixed deviation improves).
    '''
    params = CoordinationParams(p_hat=0.5, interval=(0.3, 0.7))
    pure = {(a1, a2): drg_interval_payoff(params, float(a1), float(a2))
            for a1 in (0, 1) for a2 in (0, 1)}
    # recommendations (U,L) and (D,R), each with probability 1/2; the
    # opponent's action is determined by the recommendation
    pure_ce_holds = True
    for rec, dev in (((1, 1), (0, 1)), ((0, 0), (1, 0))):       # player 1
        if pure[dev] > pure[rec] + 1e-12:
            pure_ce_holds = False
    for rec, dev in (((1, 1), (1, 0)), ((0, 0), (0, 1))):       # player 2
        if pure[dev] > pure[rec] + 1e-12:
            pure_ce_holds = False
    obeyed = pure[(1, 1)]
    mixed = drg_interval_payoff(params, 0.5, 1.0)
    return pure_ce_holds, mixed > obeyed + 1e-12


def infinite_support_ce_check(grid_size, gamma_s=0.5):
    '''Check the continuum correlated equilibrium of the symmetric game.

    At p_hat = 1/2 the row strategy x1U = 1/2 is a best response to every
    column strategy (check a), and leaves the column player indifferent at
    value 1/2 across the whole segment of column strategies (check b), so
    any distribution supported on {1/2} x [0,1] is a correlated equilibrium.
    Evaluated on a grid_size x grid_size grid of (x1U, x2L).
    '''
    if grid_size < 11:
        raise ValueError("grid_size must be at least 11")
    grid = np.linspace(0.0, 1.0, grid_size)
    best_response_ok = True
    for x2 in grid:
        vals = np.array([msd_coordination_payoff(0.5, gamma_s, x1, x2)
                         for x1 in grid])
        center = msd_coordination_payoff(0.5, gamma_s, 0.5, x2)
        if center < vals.max() - 1e-12:
            best_response_ok = False
    indifference_ok = all(
        abs(msd_coordination_payoff(0.5, gamma_s, 0.5, x2) - 0.5) <= 1e-12
        for x2 in grid)
    return {
        "passed": best_response_ok and indifference_ok,
        "row_center_always_best": best_response_ok,
        "column_indifferent_at_half": indifference_ok,
        "vacuous": gamma_s == 0.0,
    }


# --- oracle-vs-pipeline validation (used by the CLI) -------------------------

def validate_all(grid_size=21):
    '''Compare every closed form against the generic evaluation pipeline.

    Returns a list of (check name, passed, max abs error) rows.  The interval
    game with a symmetric interval [1/2 - c, 1/2 + c] coincides with the msd
    game at p_hat = 1/2 and gamma_s = 4c, which is how the interval oracle
    gets a sampled-game counterpart.
    '''
    rows = []
    grid = np.linspace(0.0, 1.0, grid_size)

    def profile(x1, x2):
        return [np.array([x1, 1.0 - x1]), np.array([x2, 1.0 - x2])]

    for p_hat, gamma_s in ((0.5, 0.5), (0.6, 0.2), (0.6, 0.8), (0.55, 1.0)):
        game = coordination_game(p_hat)
        spec = RiskSpec("msd", gamma=gamma_s)
        err = 0.0
        for x1 in grid:
            for x2 in grid:
                got = rho_profile(game, 0, profile(x1, x2), spec)
                want = msd_coordination_payoff(p_hat, gamma_s, x1, x2)
                err = max(err, abs(got - want))
                got2 = rho_profile(game, 1, profile(x1, x2), spec)
                err = max(err, abs(got2 - want))
        rows.append(("msd_coordination p=%g g=%g" % (p_hat, gamma_s),
                     err <= 1e-12, err))
    params = CoordinationParams(p_hat=0.5, interval=(0.3, 0.7))
    game = coordination_game(0.5)
    spec = RiskSpec("msd", gamma=0.8)
    err = 0.0
    for x1 in grid:
        for x2 in grid:
            got = rho_profile(game, 0, profile(x1, x2), spec)
            want = drg_interval_payoff(params, x1, x2)
            err = max(err, abs(got - want))
    rows.append(("interval_drg [0.3,0.7]", err <= 1e-12, err))
    game = cvar_example_game()
    err = 0.0
    for g in np.linspace(0.1, 0.9, 9):
        for lvl in (0.2, 0.35, 0.5, 0.7, 0.9):
            sol = cvar_example_solution(CvarExampleParams(g, lvl))
            spec = RiskSpec("cvar", gamma=g, cvar_level=lvl)
            prof = [sol["x"], sol["y"]]
            err = max(err, abs(rho_profile(game, 0, prof, spec) - sol["rho1"]))
            err = max(err, abs(rho_profile(game, 1, prof, spec) - sol["value2"]))
    rows.append(("cvar_example rho vs pipeline", err <= 1e-9, err))
    pure_ok, mixed_ok = ce_counterexample_check()
    rows.append(("ce_counterexample", pure_ok and mixed_ok, 0.0))
    inf_ce = infinite_support_ce_check(101)
    rows.append(("infinite_support_ce", inf_ce["passed"], 0.0))
    return rows
