'''Equilibrium computation via mixed complementarity systems.

For each supported measure the stacked per-player optimality conditions form
a square mixed complementarity system: complementarity pairs (a, b) with
a >= 0, b >= 0, a*b = 0, plus equalities each paired with one free variable
(game_value for the simplex row; the CVaR VaR variable z_i; the md deviation
variables).  Systems are assembled on payoff-normalized games (entries in
[0,1]) and solved by a damped semismooth Newton method on the
Fischer-Burmeister reformulation

    phi(a, b) = a + b - sqrt(a^2 + b^2)

with a smoothed generalized Jacobian near the kink and Dirichlet multistart.
A root alone is not trusted: certification additionally requires the exact
best-response gaps (module best_response) to vanish, since merit-function
stationary points can masquerade as solutions.

The normalized multilinear forms (all-complementarity, no equalities) are
provided as transforms of solved systems plus residual evaluators; they are
not the solve path.  game_value is used throughout for the simplex-row
multiplier; the CVaR level is cvar_level.
'''

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .best_response import best_response, epsilon_dre_gap
from .game_model import (action_cross_matrix, action_payoff_matrix, is_normalized,
                         normalize_payoffs)
from .risk_measures import RiskSpec, rho_profile, rho_scalar

FB_SMOOTH = 1e-10       # Jacobian smoothing only; residuals use the exact kink
RESIDUAL_TOL = 1e-10
GAP_TOL = 1e-6
TIE_TOL = 1e-12

SYSTEM_KINDS = ("empirical", "msd", "md", "cvar")


class SolveFailed(Exception):
    'No certified equilibrium found; carries the best attempt for inspection.'

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class EquilibriumSolution:
    profile: list
    game_values: np.ndarray
    multipliers: list           # per-player dicts
    auxiliaries: list           # per-player dicts
    residual_norm: float
    dre_gaps: np.ndarray
    certified: bool
    start_index: int
    seed: int
    kind: str
    params: dict
    certified_solutions: list = field(default=None, repr=False)


class ComplementaritySystem:
    '''Square complementarity system for one measure applied to all players.

    Variable layout per player (contiguous blocks in one flat vector):
      empirical  x (n), game_value
      msd        x (n), lam (K), z (K), game_value
      cvar       x (n), lam (K), nu (K), z, game_value
      md         x (n), lam_plus (K), lam_minus (K), z (K), game_value

    Rows mirror the pair lists below plus the equalities; counts match the
    variable count exactly.  All expressions are multilinear, so the
    evaluator returns exact partial derivatives.
    '''

    def __init__(self, kind, game, gamma=0.0, cvar_level=None):
        if kind not in SYSTEM_KINDS:
            raise ValueError("unknown system kind %r" % (kind,))
        if not is_normalized(game):
            raise ValueError("payoffs must lie in [0,1]; run "
                             "game_model.normalize_payoffs first")
        if kind == "msd" and not 0.0 < gamma <= 1.0:
            raise ValueError("msd system needs gamma in (0, 1]; "
                             "gamma=0 belongs to the empirical system")
        if kind == "md" and not 0.0 < gamma <= 0.5:
            raise ValueError("md system needs gamma in (0, 1/2]")
        if kind == "cvar":
            if not 0.0 < gamma <= 1.0:
                raise ValueError("cvar system needs gamma in (0, 1]")
            if cvar_level is None or not 0.0 < cvar_level < 1.0:
                raise ValueError("cvar system needs cvar_level in (0, 1)")
        self.kind = kind
        self.game = game
        self.gamma = gamma
        self.cvar_level = cvar_level
        m = game.num_players
        K = game.num_samples
        self.layout = []
        off = 0
        for i in range(m):
            n = game.action_counts[i]
            blocks = {"x": slice(off, off + n)}
            off += n
            if kind == "msd":
                blocks["lam"] = slice(off, off + K); off += K
                blocks["z"] = slice(off, off + K); off += K
            elif kind == "cvar":
                blocks["lam"] = slice(off, off + K); off += K
                blocks["nu"] = slice(off, off + K); off += K
                blocks["z"] = off; off += 1
            elif kind == "md":
                blocks["lam_plus"] = slice(off, off + K); off += K
                blocks["lam_minus"] = slice(off, off + K); off += K
                blocks["z"] = slice(off, off + K); off += K
            blocks["gv"] = off; off += 1
            self.layout.append(blocks)
        self.num_vars = off
        per_pairs = {"empirical": lambda n: n, "msd": lambda n: 2 * K + n,
                     "cvar": lambda n: 2 * K + n, "md": lambda n: 2 * K + n}[kind]
        per_eqs = {"empirical": 1, "msd": 1, "cvar": 2, "md": K + 1}[kind]
        self.num_pairs = sum(per_pairs(n) for n in game.action_counts)
        self.num_equalities = per_eqs * m
        assert self.num_pairs + self.num_equalities == self.num_vars
        # two-player games have constant cross tensors; stack them once
        self._stacks = None
        if m == 2:
            self._stacks = [np.stack(game.payoffs[0]),
                            np.stack([t.T for t in game.payoffs[1]])]

    def player_spec(self, i=None):
        'RiskSpec matching this system, for gap checks.'
        if self.kind == "empirical":
            return RiskSpec("mean")
        return RiskSpec(self.kind, gamma=self.gamma, cvar_level=self.cvar_level)

    def unpack(self, w):
        'Per-player dict of variable blocks (views into w).'
        out = []
        for blocks in self.layout:
            d = {}
            for name, sl in blocks.items():
                d[name] = w[sl] if isinstance(sl, slice) else float(w[sl])
            out.append(d)
        return out

    def _cross(self, i, j, profile):
        'Stacked (K, n_i, n_j) cross tensors d U_i[k]/d x_j.'
        if self._stacks is not None:
            return self._stacks[i]
        return np.stack([action_cross_matrix(self.game, i, j, profile, k)
                         for k in range(self.game.num_samples)])

    def _payoff_pieces(self, profile, want_cross):
        game = self.game
        P = game.sample_weights
        U, mu, cross, crossbar = [], [], [], []
        for i in range(game.num_players):
            Ui = action_payoff_matrix(game, i, profile)
            U.append(Ui)
            mu.append(P @ Ui)
            if want_cross:
                ci, cbi = {}, {}
                for j in range(game.num_players):
                    if j == i:
                        continue
                    ci[j] = self._cross(i, j, profile)
                    cbi[j] = np.einsum("k,kab->ab", P, ci[j])
                cross.append(ci)
                crossbar.append(cbi)
        return U, mu, cross, crossbar

    def expressions(self, w, want_jac=False):
        '''Raw pair expressions and equality values at w.

        Returns (a, b, eq) stacked player-major, and with want_jac also their
        exact Jacobians (Ja, Jb, Jeq) as dense arrays.
        '''
        game = self.game
        m = game.num_players
        K = game.num_samples
        P = game.sample_weights
        g = self.gamma
        blocks = self.unpack(w)
        profile = [blocks[i]["x"] for i in range(m)]
        U, mu, cross, crossbar = self._payoff_pieces(profile, want_jac)
        N = self.num_vars
        a = np.zeros(self.num_pairs)
        b = np.zeros(self.num_pairs)
        eq = np.zeros(self.num_equalities)
        if want_jac:
            Ja = np.zeros((self.num_pairs, N))
            Jb = np.zeros((self.num_pairs, N))
            Jeq = np.zeros((self.num_equalities, N))
        r = 0   # pair row cursor
        e = 0   # equality row cursor
        for i in range(m):
            L = self.layout[i]
            n = game.action_counts[i]
            x = blocks[i]["x"]
            gv = blocks[i]["gv"]
            vals = U[i] @ x
            mean_val = float(mu[i] @ x)
            d = vals - mean_val
            others = [j for j in range(m) if j != i]
            if self.kind == "empirical":
                a[r:r + n] = gv - mu[i]
                b[r:r + n] = x
                if want_jac:
                    Ja[r:r + n, L["gv"]] = 1.0
                    for j in others:
                        Ja[r:r + n, self.layout[j]["x"]] = -crossbar[i][j]
                    Jb[r:r + n, L["x"]] = np.eye(n)
                r += n
            elif self.kind == "msd":
                lam = blocks[i]["lam"]
                z = blocks[i]["z"]
                # (lam_k, d_k - z_k)
                a[r:r + K] = lam
                b[r:r + K] = d - z
                if want_jac:
                    Ja[r:r + K, L["lam"]] = np.eye(K)
                    Jb[r:r + K, L["x"]] = U[i] - mu[i]
                    Jb[r:r + K, L["z"]] = -np.eye(K)
                    for j in others:
                        Jb[r:r + K, self.layout[j]["x"]] = \
                            np.einsum("a,kab->kb", x, cross[i][j] - crossbar[i][j])
                r += K
                # (gamma P_k - lam_k, -z_k)
                a[r:r + K] = g * P - lam
                b[r:r + K] = -z
                if want_jac:
                    Ja[r:r + K, L["lam"]] = -np.eye(K)
                    Jb[r:r + K, L["z"]] = -np.eye(K)
                r += K
                # (gv - v_l, x_l),  v = mu + sum_k lam_k (U[k] - mu)
                v = mu[i] + (U[i] - mu[i]).T @ lam
                a[r:r + n] = gv - v
                b[r:r + n] = x
                if want_jac:
                    Ja[r:r + n, L["gv"]] = 1.0
                    Ja[r:r + n, L["lam"]] = -(U[i] - mu[i]).T
                    for j in others:
                        dv = (1.0 - lam.sum()) * crossbar[i][j] \
                            + np.einsum("k,kab->ab", lam, cross[i][j])
                        Ja[r:r + n, self.layout[j]["x"]] = -dv
                    Jb[r:r + n, L["x"]] = np.eye(n)
                r += n
                eq[e] = x.sum() - 1.0
                if want_jac:
                    Jeq[e, L["x"]] = 1.0
                e += 1
            elif self.kind == "cvar":
                lam = blocks[i]["lam"]
                nu = blocks[i]["nu"]
                z = blocks[i]["z"]
                lvl = self.cvar_level
                # ((g/lvl) P_k - lam_k, -nu_k)
                a[r:r + K] = (g / lvl) * P - lam
                b[r:r + K] = -nu
                if want_jac:
                    Ja[r:r + K, L["lam"]] = -np.eye(K)
                    Jb[r:r + K, L["nu"]] = -np.eye(K)
                r += K
                # (lam_k, vals_k - z - nu_k)
                a[r:r + K] = lam
                b[r:r + K] = vals - z - nu
                if want_jac:
                    Ja[r:r + K, L["lam"]] = np.eye(K)
                    Jb[r:r + K, L["x"]] = U[i]
                    Jb[r:r + K, L["z"]] = -1.0
                    Jb[r:r + K, L["nu"]] = -np.eye(K)
                    for j in others:
                        Jb[r:r + K, self.layout[j]["x"]] = \
                            np.einsum("a,kab->kb", x, cross[i][j])
                r += K
                # (gv - v_l, x_l),  v = (1-g) mu + U^T lam
                v = (1.0 - g) * mu[i] + U[i].T @ lam
                a[r:r + n] = gv - v
                b[r:r + n] = x
                if want_jac:
                    Ja[r:r + n, L["gv"]] = 1.0
                    Ja[r:r + n, L["lam"]] = -U[i].T
                    for j in others:
                        dv = (1.0 - g) * crossbar[i][j] \
                            + np.einsum("k,kab->ab", lam, cross[i][j])
                        Ja[r:r + n, self.layout[j]["x"]] = -dv
                    Jb[r:r + n, L["x"]] = np.eye(n)
                r += n
                eq[e] = lam.sum() - g          # paired with free z
                eq[e + 1] = x.sum() - 1.0      # paired with free gv
                if want_jac:
                    Jeq[e, L["lam"]] = 1.0
                    Jeq[e + 1, L["x"]] = 1.0
                e += 2
            else:   # md
                lp = blocks[i]["lam_plus"]
                lm = blocks[i]["lam_minus"]
                z = blocks[i]["z"]
                a[r:r + K] = lp
                b[r:r + K] = d - z
                if want_jac:
                    Ja[r:r + K, L["lam_plus"]] = np.eye(K)
                    Jb[r:r + K, L["x"]] = U[i] - mu[i]
                    Jb[r:r + K, L["z"]] = -np.eye(K)
                    for j in others:
                        Jb[r:r + K, self.layout[j]["x"]] = \
                            np.einsum("a,kab->kb", x, cross[i][j] - crossbar[i][j])
                r += K
                a[r:r + K] = lm
                b[r:r + K] = -d - z
                if want_jac:
                    Ja[r:r + K, L["lam_minus"]] = np.eye(K)
                    Jb[r:r + K, L["x"]] = -(U[i] - mu[i])
                    Jb[r:r + K, L["z"]] = -np.eye(K)
                    for j in others:
                        Jb[r:r + K, self.layout[j]["x"]] = \
                            -np.einsum("a,kab->kb", x, cross[i][j] - crossbar[i][j])
                r += K
                lam_d = lp - lm
                v = mu[i] + (U[i] - mu[i]).T @ lam_d
                a[r:r + n] = gv - v
                b[r:r + n] = x
                if want_jac:
                    Ja[r:r + n, L["gv"]] = 1.0
                    Ja[r:r + n, L["lam_plus"]] = -(U[i] - mu[i]).T
                    Ja[r:r + n, L["lam_minus"]] = (U[i] - mu[i]).T
                    for j in others:
                        dv = (1.0 - lam_d.sum()) * crossbar[i][j] \
                            + np.einsum("k,kab->ab", lam_d, cross[i][j])
                        Ja[r:r + n, self.layout[j]["x"]] = -dv
                    Jb[r:r + n, L["x"]] = np.eye(n)
                r += n
                eq[e:e + K] = lp + lm - g * P   # paired with free z_k
                eq[e + K] = x.sum() - 1.0
                if want_jac:
                    Jeq[e:e + K, L["lam_plus"]] = np.eye(K)
                    Jeq[e:e + K, L["lam_minus"]] = np.eye(K)
                    Jeq[e + K, L["x"]] = 1.0
                e += K + 1
            if self.kind == "empirical":
                eq[e] = x.sum() - 1.0
                if want_jac:
                    Jeq[e, L["x"]] = 1.0
                e += 1
        if want_jac:
            return a, b, eq, Ja, Jb, Jeq
        return a, b, eq


def fb_residual(a, b, eq):
    'Stacked exact Fischer-Burmeister residual plus raw equalities.'
    return np.concatenate([a + b - np.sqrt(a * a + b * b), eq])


def residual(system, w):
    return fb_residual(*system.expressions(w))


def residual_and_jacobian(system, w):
    a, b, eq, Ja, Jb, Jeq = system.expressions(w, want_jac=True)
    phi = np.concatenate([a + b - np.sqrt(a * a + b * b), eq])
    s = np.sqrt(a * a + b * b + FB_SMOOTH ** 2)
    J = np.vstack([(1.0 - a / s)[:, None] * Ja + (1.0 - b / s)[:, None] * Jb, Jeq])
    return phi, J


def build_empirical_system(game):
    'Nash conditions of the mean game (the gamma = 0 route for every kind).'
    return ComplementaritySystem("empirical", game)


def build_msd_system(game, gamma_s):
    if gamma_s == 0.0:
        return build_empirical_system(game)
    return ComplementaritySystem("msd", game, gamma=gamma_s)


def build_md_system(game, gamma_d):
    if gamma_d == 0.0:
        return build_empirical_system(game)
    return ComplementaritySystem("md", game, gamma=gamma_d)


def build_cvar_system(game, gamma_c, cvar_level):
    if gamma_c == 0.0:
        return build_empirical_system(game)
    return ComplementaritySystem("cvar", game, gamma=gamma_c, cvar_level=cvar_level)


def point_at_profile(system, profile):
    '''Stack a full variable vector at the given strategies: box-midpoint
    multipliers, auxiliaries at their complementarity-consistent values.'''
    game = system.game
    P = game.sample_weights
    g = system.gamma
    w = np.zeros(system.num_vars)
    blocks = system.layout
    for i, x in enumerate(profile):
        w[blocks[i]["x"]] = x
    spec = system.player_spec()
    for i in range(game.num_players):
        U = action_payoff_matrix(game, i, profile)
        vals = U @ profile[i]
        d = vals - float(P @ U @ profile[i])
        if system.kind == "msd":
            w[blocks[i]["lam"]] = 0.5 * g * P
            w[blocks[i]["z"]] = np.minimum(0.0, d)
        elif system.kind == "cvar":
            w[blocks[i]["lam"]] = 0.5 * (g / system.cvar_level) * P
            z = float(P @ vals)
            w[blocks[i]["z"]] = z
            w[blocks[i]["nu"]] = np.minimum(0.0, vals - z)
        elif system.kind == "md":
            w[blocks[i]["lam_plus"]] = 0.5 * g * P
            w[blocks[i]["lam_minus"]] = 0.5 * g * P
            w[blocks[i]["z"]] = -np.abs(d)
        w[blocks[i]["gv"]] = rho_scalar(spec, vals, P)
    return w


def initial_point(system, rng):
    '''Random interior start: Dirichlet(1) strategies, box-midpoint
    multipliers, auxiliaries set to their complementarity-consistent values
    at those strategies.'''
    profile = [rng.dirichlet(np.ones(n)) for n in system.game.action_counts]
    return point_at_profile(system, profile)


def _newton(system, w, max_iters, tol):
    'Damped semismooth Newton on 0.5 ||Phi||^2; returns (w, residual_norm).'
    phi, J = residual_and_jacobian(system, w)
    merit = 0.5 * float(phi @ phi)
    for _ in range(max_iters):
        rnorm = np.linalg.norm(phi)
        if rnorm <= tol:
            break
        try:
            step = np.linalg.solve(J, -phi)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            # singular generalized Jacobian (degenerate solution manifolds,
            # e.g. the CVaR VaR interval): least-squares direction
            step = np.linalg.lstsq(J, -phi, rcond=None)[0]
        grad = J.T @ phi
        slope = float(grad @ step)
        if slope > -1e-14 * max(1.0, np.linalg.norm(grad) * np.linalg.norm(step)):
            step = -grad
            slope = -float(grad @ grad)
            if slope >= 0.0:
                break
        t = 1.0
        improved = False
        for _ in range(40):
            trial = w + t * step
            phi_t = residual(system, trial)
            merit_t = 0.5 * float(phi_t @ phi_t)
            if merit_t <= merit + 1e-4 * t * slope:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        w = trial
        phi, J = residual_and_jacobian(system, trial)
        merit = 0.5 * float(phi @ phi)
    return w, float(np.linalg.norm(phi))


def _profile_from(system, w):
    'Clip-and-renormalize the strategy blocks of w into a valid profile.'
    blocks = system.unpack(w)
    profile = []
    for i in range(system.game.num_players):
        x = np.maximum(blocks[i]["x"], 0.0)
        s = x.sum()
        profile.append(x / s if s > 0 else np.full(x.size, 1.0 / x.size))
    return profile


def _best_response_refine(system, specs, profile, rounds=60):
    '''Damped exact-best-response dynamics from a profile; returns the
    lowest-gap iterate seen.  Used to rescue starts whose Newton iteration
    stalls: the Fischer-Burmeister merit has genuine local minima on these
    (nonmonotone) systems, and no descent step escapes them, but the LP
    best responses jump straight toward equilibrium supports.'''
    game = system.game
    best_gap, best_prof = np.inf, profile
    for _ in range(rounds):
        brs, gap = [], 0.0
        for i in range(game.num_players):
            opp = [profile[j] for j in range(game.num_players) if j != i]
            br = best_response(game, i, opp, specs[i])
            brs.append(br.strategy)
            gap = max(gap, br.value - rho_profile(game, i, profile, specs[i]))
        if gap < best_gap:
            best_gap, best_prof = gap, [x.copy() for x in profile]
        if best_gap <= TIE_TOL:
            break
        profile = [0.5 * x + 0.5 * b for x, b in zip(profile, brs)]
    return best_prof


def _maximal_var_optimizer(vals, P, lvl):
    'Largest maximizer of z + (1/lvl) E min(0, vals - z): an atom value.'
    order = np.argsort(vals, kind="stable")
    below = 0.0
    best = vals[order[0]]
    for idx in order:
        if below <= lvl + TIE_TOL:
            best = vals[idx]
        below += P[idx]
    return float(best)


def _canonicalize_cvar(system, w, tol):
    '''Snap each player's VaR variable to the maximal optimizer and redo nu.

    The optimizer interval of the inner VaR problem is flat wherever the
    quantile is ambiguous (e.g. cvar_level = 1/2 with two equal-weight
    atoms), so Newton may stop anywhere inside it.  The snap keeps the
    solution only if the residual survives.
    '''
    game = system.game
    blocks = system.layout
    w2 = w.copy()
    profile = [w[blocks[i]["x"]] for i in range(game.num_players)]
    for i in range(game.num_players):
        U = action_payoff_matrix(game, i, profile)
        vals = U @ profile[i]
        z = _maximal_var_optimizer(vals, game.sample_weights, system.cvar_level)
        w2[blocks[i]["z"]] = z
        w2[blocks[i]["nu"]] = np.minimum(0.0, vals - z)
    if np.linalg.norm(residual(system, w2)) <= tol:
        return w2
    return w


def _solution_from_point(system, w, rnorm, gaps, certified, start_index, seed):
    blocks = system.unpack(w)
    game = system.game
    profile = []
    for i in range(game.num_players):
        x = np.maximum(blocks[i]["x"], 0.0)
        profile.append(x / x.sum())
    gvs = np.array([blocks[i]["gv"] for i in range(game.num_players)])
    multipliers, auxiliaries = [], []
    for i in range(game.num_players):
        mult, aux = {}, {}
        if system.kind == "msd":
            mult["lambda"] = blocks[i]["lam"].copy()
            aux["z"] = blocks[i]["z"].copy()
        elif system.kind == "cvar":
            mult["lambda"] = blocks[i]["lam"].copy()
            aux["z"] = blocks[i]["z"]
            aux["nu"] = blocks[i]["nu"].copy()
        elif system.kind == "md":
            mult["lambda_plus"] = blocks[i]["lam_plus"].copy()
            mult["lambda_minus"] = blocks[i]["lam_minus"].copy()
            aux["z"] = blocks[i]["z"].copy()
        multipliers.append(mult)
        auxiliaries.append(aux)
    params = {"gamma": system.gamma}
    if system.cvar_level is not None:
        params["cvar_level"] = system.cvar_level
    return EquilibriumSolution(
        profile=profile, game_values=gvs, multipliers=multipliers,
        auxiliaries=auxiliaries, residual_norm=rnorm, dre_gaps=gaps,
        certified=certified, start_index=start_index, seed=seed,
        kind=system.kind, params=params)


def solve(system, seed=0, starts=32, max_iters=200, tol=RESIDUAL_TOL,
          gap_tol=GAP_TOL, collect_all=False):
    '''Multistart semismooth Newton solve of a complementarity system.

    Each start draws its own rng stream from (seed, start index), so runs
    are reproducible.  A start counts as certified when the residual norm
    meets tol AND every exact best-response gap is at most gap_tol.  With
    collect_all the scan continues through every start and all distinct
    certified solutions are attached to the returned (first-certified)
    solution; otherwise the first certified start returns immediately.
    When no start certifies, the stalled points are retried once each from
    a damped best-response refinement of their final profiles (pure
    equilibria in particular sit in narrow basins that interior starts
    miss, and the merit function has genuine local minima); only if the
    rescue pass also certifies nothing is SolveFailed raised, carrying the
    best attempt.
    '''
    game = system.game
    specs = [system.player_spec(i) for i in range(game.num_players)]
    best = None         # (rnorm, start, w, gaps)
    found = []
    stalled = []

    def attempt(w, rnorm, s_idx):
        'Certification path shared by the start loop and the rescue pass.'
        gaps = None
        if rnorm <= tol:
            if system.kind == "cvar":
                w = _canonicalize_cvar(system, w, tol)
                rnorm = float(np.linalg.norm(residual(system, w)))
            profile = _profile_from(system, w)
            gaps = epsilon_dre_gap(game, profile, specs)
            if np.max(gaps) <= gap_tol:
                found.append(_solution_from_point(
                    system, w, rnorm, gaps, True, s_idx, seed))
        nonlocal best
        if best is None or rnorm < best[0]:
            best = (rnorm, s_idx, w, gaps)

    for s_idx in range(starts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, s_idx]))
        w0 = initial_point(system, rng)
        w, rnorm = _newton(system, w0, max_iters, tol)
        if rnorm > tol:
            stalled.append((s_idx, w))
        attempt(w, rnorm, s_idx)
        if found and not collect_all:
            break
    if not found:
        for s_idx, w in stalled:
            refined = _best_response_refine(system, specs,
                                            _profile_from(system, w))
            w2, rn2 = _newton(system, point_at_profile(system, refined),
                              max_iters, tol)
            attempt(w2, rn2, s_idx)
            if found and not collect_all:
                break
    if found:
        primary = found[0]
        primary.certified_solutions = found
        return primary
    rnorm, s_idx, w, gaps = best
    if gaps is None:
        gaps = np.full(game.num_players, np.inf)
    fail = _solution_from_point(system, w, rnorm, gaps, False, s_idx, seed)
    raise SolveFailed("no certified equilibrium in %d starts "
                      "(best residual %.3e, max gap %.3e)"
                      % (starts, rnorm, float(np.max(gaps))), best=fail)


def distinct_profiles(solutions, tol=1e-6):
    'Filter solutions whose strategy profiles differ by more than tol (sup norm).'
    kept = []
    for sol in solutions:
        dup = False
        for other in kept:
            dist = max(np.max(np.abs(x - y))
                       for x, y in zip(sol.profile, other.profile))
            if dist <= tol:
                dup = True
                break
        if not dup:
            kept.append(sol)
    return kept


# --- public convenience: solve an arbitrary game under one measure ----------

def solve_game(game, spec, seed=0, starts=32, max_iters=200, tol=RESIDUAL_TOL,
               gap_tol=GAP_TOL, collect_all=False):
    '''Normalize payoffs, assemble the right system, solve, map values back.

    Strategies and lambda multipliers are scale-free; game values and the
    CVaR VaR variable map back affinely, deviation-type auxiliaries (msd/md
    z, cvar nu) linearly.  Gaps are reported on the original payoff scale.
    '''
    norm_game, transforms = normalize_payoffs(game)
    if spec.kind == "mean" or spec.gamma == 0.0:
        system = build_empirical_system(norm_game)
    elif spec.kind == "msd":
        system = build_msd_system(norm_game, spec.gamma)
    elif spec.kind == "md":
        system = build_md_system(norm_game, spec.gamma)
    elif spec.kind == "cvar":
        system = build_cvar_system(norm_game, spec.gamma, spec.cvar_level)
    else:
        raise ValueError("cannot solve for kind %r" % (spec.kind,))
    try:
        sol = solve(system, seed=seed, starts=starts, max_iters=max_iters,
                    tol=tol, gap_tol=gap_tol, collect_all=collect_all)
    except SolveFailed as err:
        err.best = _denormalize_solution(err.best, transforms)
        raise
    out = _denormalize_solution(sol, transforms)
    if sol.certified_solutions:
        out.certified_solutions = [_denormalize_solution(s, transforms)
                                   for s in sol.certified_solutions]
    return out


def _denormalize_solution(sol, transforms):
    gvs = np.array([lo + span * gv
                    for (lo, span), gv in zip(transforms, sol.game_values)])
    auxiliaries = []
    gaps = np.array([span * gp for (lo, span), gp in zip(transforms, sol.dre_gaps)])
    for i, aux in enumerate(sol.auxiliaries):
        lo, span = transforms[i]
        out = {}
        for name, val in aux.items():
            if sol.kind == "cvar" and name == "z":
                out[name] = lo + span * val
            else:
                out[name] = span * np.asarray(val) if np.ndim(val) else span * val
        auxiliaries.append(out)
    return EquilibriumSolution(
        profile=[x.copy() for x in sol.profile], game_values=gvs,
        multipliers=[dict(mlt) for mlt in sol.multipliers],
        auxiliaries=auxiliaries, residual_norm=sol.residual_norm,
        dre_gaps=gaps, certified=sol.certified, start_index=sol.start_index,
        seed=sol.seed, kind=sol.kind, params=dict(sol.params))


def _normalize_solution(sol, transforms):
    'Inverse of _denormalize_solution (used by verify_solution).'
    gvs = np.array([(gv - lo) / span
                    for (lo, span), gv in zip(transforms, sol.game_values)])
    auxiliaries = []
    for i, aux in enumerate(sol.auxiliaries):
        lo, span = transforms[i]
        out = {}
        for name, val in aux.items():
            if sol.kind == "cvar" and name == "z":
                out[name] = (val - lo) / span
            else:
                out[name] = np.asarray(val) / span if np.ndim(val) else val / span
        auxiliaries.append(out)
    return EquilibriumSolution(
        profile=[x.copy() for x in sol.profile], game_values=gvs,
        multipliers=[dict(mlt) for mlt in sol.multipliers],
        auxiliaries=auxiliaries, residual_norm=sol.residual_norm,
        dre_gaps=sol.dre_gaps, certified=sol.certified,
        start_index=sol.start_index, seed=sol.seed, kind=sol.kind,
        params=dict(sol.params))


def _pack_solution(system, sol):
    'Flat variable vector of a (normalized-space) solution.'
    w = np.zeros(system.num_vars)
    for i, blocks in enumerate(system.layout):
        w[blocks["x"]] = sol.profile[i]
        w[blocks["gv"]] = sol.game_values[i]
        if system.kind == "msd":
            w[blocks["lam"]] = sol.multipliers[i]["lambda"]
            w[blocks["z"]] = sol.auxiliaries[i]["z"]
        elif system.kind == "cvar":
            w[blocks["lam"]] = sol.multipliers[i]["lambda"]
            w[blocks["z"]] = sol.auxiliaries[i]["z"]
            w[blocks["nu"]] = sol.auxiliaries[i]["nu"]
        elif system.kind == "md":
            w[blocks["lam_plus"]] = sol.multipliers[i]["lambda_plus"]
            w[blocks["lam_minus"]] = sol.multipliers[i]["lambda_minus"]
            w[blocks["z"]] = sol.auxiliaries[i]["z"]
    return w


def verify_solution(game, specs, solution, residual_tol=1e-8,
                    value_tol=1e-7, identity_tol=1e-8, gap_tol=GAP_TOL):
    '''Independent diagnostic checks of a reported equilibrium.

    Rebuilds the system from scratch on the normalized game, re-packs the
    reported (original-scale) solution into a variable vector, and checks:
    residual norm, game_value_i = rho_i(profile) on the original scale,
    the value identity sum_l x_l v_l = game_value, and fresh best-response
    gaps.  Returns a dict of per-check booleans plus measured numbers.
    '''
    norm_game, transforms = normalize_payoffs(game)
    if solution.kind == "empirical":
        system = build_empirical_system(norm_game)
    elif solution.kind == "msd":
        system = build_msd_system(norm_game, solution.params["gamma"])
    elif solution.kind == "md":
        system = build_md_system(norm_game, solution.params["gamma"])
    elif solution.kind == "cvar":
        system = build_cvar_system(norm_game, solution.params["gamma"],
                                   solution.params["cvar_level"])
    else:
        raise ValueError("unknown solution kind %r" % (solution.kind,))
    norm_sol = _normalize_solution(solution, transforms)
    w = _pack_solution(system, norm_sol)
    rnorm = float(np.linalg.norm(residual(system, w)))
    report = {"residual_norm": rnorm, "residual_ok": rnorm <= residual_tol}
    # game values against rho on the original scale
    value_err = 0.0
    for i in range(game.num_players):
        rho = rho_profile(game, i, solution.profile, specs[i])
        value_err = max(value_err, abs(rho - float(solution.game_values[i])))
    report["value_err"] = value_err
    report["value_ok"] = value_err <= value_tol
    # sum_l x_l v_l = game_value, in normalized space where v lives
    a, b, eq = system.expressions(w)
    identity_err = 0.0
    r = 0
    K = norm_game.num_samples
    for i in range(game.num_players):
        n = norm_game.action_counts[i]
        skip = 0 if system.kind == "empirical" else 2 * K
        v = norm_sol.game_values[i] - a[r + skip:r + skip + n]
        identity_err = max(identity_err,
                           abs(float(v @ norm_sol.profile[i]) - norm_sol.game_values[i]))
        r += skip + n
    report["identity_err"] = identity_err
    report["identity_ok"] = identity_err <= identity_tol
    gaps = epsilon_dre_gap(norm_game, solution.profile,
                           [system.player_spec(i) for i in range(game.num_players)])
    report["dre_gaps"] = gaps
    report["gaps_ok"] = bool(np.max(gaps) <= gap_tol)
    report["ok"] = bool(report["residual_ok"] and report["value_ok"]
                        and report["identity_ok"] and report["gaps_ok"])
    return report


def solution_to_json(solution):
    'JSON-ready dict: strategies, values, multipliers, diagnostics.'
    def arr(x):
        return np.asarray(x, dtype=float).tolist()
    return {
        "kind": solution.kind,
        "params": {k: float(v) for k, v in solution.params.items()},
        "strategies": [arr(x) for x in solution.profile],
        "game_values": arr(solution.game_values),
        "multipliers": [{k: arr(v) for k, v in mlt.items()}
                        for mlt in solution.multipliers],
        "auxiliaries": [{k: (float(v) if np.ndim(v) == 0 else arr(v))
                         for k, v in aux.items()}
                        for aux in solution.auxiliaries],
        "residual_norm": float(solution.residual_norm),
        "dre_gaps": arr(solution.dre_gaps),
        "certified": bool(solution.certified),
        "seed": int(solution.seed),
        "start_index": int(solution.start_index),
    }


# --- normalized multilinear (all-complementarity) forms ---------------------

def to_mlcp_msd(system, solution):
    '''Scale a solved msd system into its multilinear complementarity form.

    With alpha_i = game_value_i and tau = (prod alpha)^(1/(m-1)):
    x~_i = (alpha_i / tau) x_i, z~ = z / tau, lambda unchanged.
    Requires every game value positive (holds for normalized payoffs unless
    a player's value is exactly zero, which is rejected).
    '''
    if system.kind != "msd":
        raise ValueError("expected an msd system")
    alpha = np.asarray(solution.game_values, dtype=float)
    if np.any(alpha <= 1e-12):
        raise ValueError("zero game_value: the multilinear scaling is undefined")
    m = len(alpha)
    tau = float(np.prod(alpha)) ** (1.0 / (m - 1))
    return {
        "x_tilde": [(alpha[i] / tau) * solution.profile[i] for i in range(m)],
        "z_tilde": [np.asarray(solution.auxiliaries[i]["z"]) / tau for i in range(m)],
        "lam": [solution.multipliers[i]["lambda"].copy() for i in range(m)],
        "alpha": alpha,
        "tau": tau,
    }


def mlcp_residual_msd(system, point):
    'Exact FB residual of the msd multilinear form at a transformed point.'
    game = system.game
    P = game.sample_weights
    g = system.gamma
    xt = point["x_tilde"]
    parts = []
    for i in range(game.num_players):
        U = action_payoff_matrix(game, i, xt)
        mu = P @ U
        lam = point["lam"][i]
        zt = point["z_tilde"][i]
        d = U @ xt[i] - float(mu @ xt[i])
        v = mu + (U - mu).T @ lam
        a = np.concatenate([lam, g * P - lam, 1.0 - v])
        b = np.concatenate([d - zt, -zt, xt[i]])
        parts.append(a + b - np.sqrt(a * a + b * b))
    return np.concatenate(parts)


def from_mlcp_msd(system, point):
    '''Invert the msd multilinear scaling back to strategies and values.

    x_i = x~_i / sum(x~_i); alpha_i = sum(x~_i) / prod_j sum(x~_j);
    the all-zero x~ solution is rejected as degenerate.
    '''
    xt = point["x_tilde"]
    sums = np.array([float(np.sum(x)) for x in xt])
    if np.any(sums <= 1e-12):
        raise ValueError("degenerate multilinear solution: some x~ is zero")
    denom = float(np.prod(sums))
    tau = 1.0 / denom
    return {
        "profile": [x / s for x, s in zip(xt, sums)],
        "game_values": sums / denom,
        "lam": [lam.copy() for lam in point["lam"]],
        "z": [tau * np.asarray(z) for z in point["z_tilde"]],
    }


def to_mlcp_cvar(system, solution, t=None):
    '''Scale a solved cvar system into its multilinear form.

    New positive per-player variables t_i (default 1) with
    Theta = (prod t)^(1/(m-1)); then x~_i = (alpha_i t_i / (tau Theta)) x_i,
    nu~ = nu / (tau Theta), z~ = z / (tau Theta), lambda~ = t_i lambda.
    '''
    if system.kind != "cvar":
        raise ValueError("expected a cvar system")
    alpha = np.asarray(solution.game_values, dtype=float)
    if np.any(alpha <= 1e-12):
        raise ValueError("zero game_value: the multilinear scaling is undefined")
    m = len(alpha)
    t = np.ones(m) if t is None else np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    tau = float(np.prod(alpha)) ** (1.0 / (m - 1))
    theta = float(np.prod(t)) ** (1.0 / (m - 1))
    scale = tau * theta
    return {
        "x_tilde": [(alpha[i] * t[i] / scale) * solution.profile[i] for i in range(m)],
        "nu_tilde": [np.asarray(solution.auxiliaries[i]["nu"]) / scale for i in range(m)],
        "z_tilde": [solution.auxiliaries[i]["z"] / scale for i in range(m)],
        "lam_tilde": [t[i] * solution.multipliers[i]["lambda"] for i in range(m)],
        "t": t,
        "alpha": alpha,
        "tau": tau,
        "theta": theta,
    }


def mlcp_residual_cvar(system, point):
    'Exact FB residual of the cvar multilinear form at a transformed point.'
    game = system.game
    P = game.sample_weights
    g = system.gamma
    lvl = system.cvar_level
    xt = point["x_tilde"]
    t = point["t"]
    parts = []
    for i in range(game.num_players):
        U = action_payoff_matrix(game, i, xt)
        mu = P @ U
        lam = point["lam_tilde"][i]
        nut = point["nu_tilde"][i]
        zt = point["z_tilde"][i]
        vals = U @ xt[i]
        a = np.concatenate([(g / lvl) * P * t[i] - lam, lam,
                            1.0 - t[i] * (1.0 - g) * mu - U.T @ lam, [t[i]]])
        b = np.concatenate([-nut, vals - zt - nut, xt[i],
                            [g * t[i] - float(np.sum(lam))]])
        parts.append(a + b - np.sqrt(a * a + b * b))
    return np.concatenate(parts)


def from_mlcp_cvar(system, point):
    '''Invert the cvar multilinear scaling.

    tau Theta = 1 / prod_j sum(x~_j); alpha_i = (tau Theta / t_i) sum(x~_i);
    lambda = lambda~ / t_i.  Zero t_i (the degenerate branch) is rejected.
    '''
    xt = point["x_tilde"]
    t = np.asarray(point["t"], dtype=float)
    if np.any(t <= 1e-12):
        raise ValueError("degenerate multilinear solution: some t is zero")
    sums = np.array([float(np.sum(x)) for x in xt])
    if np.any(sums <= 1e-12):
        raise ValueError("degenerate multilinear solution: some x~ is zero")
    scale = 1.0 / float(np.prod(sums))
    return {
        "profile": [x / s for x, s in zip(xt, sums)],
        "game_values": scale * sums / t,
        "lam": [point["lam_tilde"][i] / t[i] for i in range(len(t))],
        "nu": [scale * np.asarray(nu) for nu in point["nu_tilde"]],
        "z": [scale * z for z in point["z_tilde"]],
    }


# --- brute-force Nash oracle for the gamma = 0 route ------------------------

def empirical_matrices(game):
    'Weighted-mean payoff matrices (A, B) of a two-player sampled game.'
    if game.num_players != 2:
        raise ValueError("two-player games only")
    P = game.sample_weights
    A = sum(p * t for p, t in zip(P, game.payoffs[0]))
    B = sum(p * t for p, t in zip(P, game.payoffs[1]))
    return A, B


def support_enumeration_nash(game, tol=1e-9):
    '''All Nash equilibria of the two-player mean game with equal-size
    supports (exhaustive for generic games).  Returns a list of (x, y).'''
    A, B = empirical_matrices(game)
    n1, n2 = A.shape
    found = []
    for size in range(1, min(n1, n2) + 1):
        for rows in combinations(range(n1), size):
            for cols in combinations(range(n2), size):
                eq = _support_pair_nash(A, B, list(rows), list(cols), tol)
                if eq is not None:
                    x, y = eq
                    if not any(np.allclose(x, x0, atol=1e-8)
                               and np.allclose(y, y0, atol=1e-8)
                               for x0, y0 in found):
                        found.append((x, y))
    return found


def _support_pair_nash(A, B, rows, cols, tol):
    s = len(rows)
    n1, n2 = A.shape
    # indifference of player 1 over `rows` given y on `cols`, and vice versa
    M1 = np.zeros((s + 1, s + 1))
    M1[:s, :s] = A[np.ix_(rows, cols)]
    M1[:s, s] = -1.0
    M1[s, :s] = 1.0
    rhs1 = np.zeros(s + 1)
    rhs1[s] = 1.0
    M2 = np.zeros((s + 1, s + 1))
    M2[:s, :s] = B[np.ix_(rows, cols)].T
    M2[:s, s] = -1.0
    M2[s, :s] = 1.0
    rhs2 = np.zeros(s + 1)
    rhs2[s] = 1.0
    try:
        sol1 = np.linalg.solve(M1, rhs1)
        sol2 = np.linalg.solve(M2, rhs2)
    except np.linalg.LinAlgError:
        return None
    y_s, v1 = sol1[:s], sol1[s]
    x_s, v2 = sol2[:s], sol2[s]
    if np.any(y_s < -tol) or np.any(x_s < -tol):
        return None
    x = np.zeros(n1)
    y = np.zeros(n2)
    x[rows] = np.maximum(x_s, 0.0)
    y[cols] = np.maximum(y_s, 0.0)
    x /= x.sum()
    y /= y.sum()
    if np.max(A @ y) > v1 + 1e-8 or np.max(B.T @ x) > v2 + 1e-8:
        return None
    return x, y
