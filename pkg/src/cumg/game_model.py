'''Finite m-player games with K exogenous payoff samples.

A SampledGame stores, for every player, K dense payoff tensors of shape
n_1 x ... x n_m (one per sample) together with probability weights over the
samples.  All payoff evaluation (pure, mixed, expected) happens here; risk
functionals live in risk_measures and consume the per-sample values this
module produces.
'''

import json

import numpy as np

WEIGHT_TOL = 1e-12


class SampledGame:
    '''Immutable container for an m-player game with sampled payoffs.

    payoffs      list over players; payoffs[i] is a list of K arrays, each of
                 shape (n_1, ..., n_m), entry = utility of player i at that
                 pure action profile under sample k
    sample_weights  length-K probability vector over samples (default uniform)
    '''

    def __init__(self, payoffs, sample_weights=None):
        if len(payoffs) < 2:
            raise ValueError("need at least two players")
        tensors = []
        shape = None
        num_samples = None
        for i, per_player in enumerate(payoffs):
            arrs = [np.asarray(t, dtype=float) for t in per_player]
            if num_samples is None:
                num_samples = len(arrs)
                if num_samples < 1:
                    raise ValueError("need at least one sample")
            elif len(arrs) != num_samples:
                raise ValueError("players disagree on the number of samples")
            for t in arrs:
                if shape is None:
                    shape = t.shape
                if t.shape != shape:
                    raise ValueError("payoff tensors must share one shape")
                if not np.all(np.isfinite(t)):
                    raise ValueError("payoff entries must be finite")
            tensors.append(arrs)
        if len(shape) != len(payoffs):
            raise ValueError("tensor rank must equal the number of players")
        if sample_weights is None:
            w = np.full(num_samples, 1.0 / num_samples)
        else:
            w = np.asarray(sample_weights, dtype=float)
            if w.shape != (num_samples,):
                raise ValueError("sample_weights length must equal the sample count")
            if np.any(w < 0):
                raise ValueError("sample_weights must be nonnegative")
            if abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise ValueError("sample_weights must sum to 1 within %g" % WEIGHT_TOL)
        for arrs in tensors:
            for t in arrs:
                t.setflags(write=False)
        w.setflags(write=False)
        self.payoffs = tensors
        self.sample_weights = w
        self.action_counts = list(shape)
        self.num_players = len(payoffs)
        self.num_samples = num_samples

    def __repr__(self):
        return "SampledGame(m=%d, actions=%s, K=%d)" % (
            self.num_players, self.action_counts, self.num_samples)


def check_strategy(x, n):
    'Validate a single mixed strategy: length n, entries >= 0, sums to 1.'
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError("strategy must have length %d" % n)
    if np.any(x < -WEIGHT_TOL):
        raise ValueError("strategy entries must be nonnegative")
    if abs(x.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError("strategy must sum to 1 within %g" % WEIGHT_TOL)
    return x


def check_profile(game, profile):
    'Validate one strategy per player against the game shape.'
    if len(profile) != game.num_players:
        raise ValueError("profile must contain one strategy per player")
    return [check_strategy(x, n) for x, n in zip(profile, game.action_counts)]


def pure_payoff(game, player, action_profile, sample):
    'Tensor lookup u_i(a | xi_k).'
    if not 0 <= player < game.num_players:
        raise IndexError("player index %d out of range" % player)
    if not 0 <= sample < game.num_samples:
        raise IndexError("sample index %d out of range" % sample)
    if len(action_profile) != game.num_players:
        raise IndexError("action profile must have one action per player")
    for j, (a, n) in enumerate(zip(action_profile, game.action_counts)):
        if not 0 <= a < n:
            raise IndexError("action %d out of range for player %d" % (a, j))
    return float(game.payoffs[player][sample][tuple(action_profile)])


def pure_payoff_samples(game, player, action_profile):
    'Vector of u_i(a | xi_k) across all K samples.'
    return np.array([pure_payoff(game, player, action_profile, k)
                     for k in range(game.num_samples)])


def mixed_payoff_per_sample(game, player, profile, sample):
    'Full multilinear contraction of tensor k against every strategy.'
    profile = check_profile(game, profile)
    t = game.payoffs[player][sample]
    # contracting the trailing axis repeatedly walks players m-1, ..., 0
    for j in range(game.num_players - 1, -1, -1):
        t = t @ profile[j]
    return float(t)


def mixed_payoff_samples(game, player, profile):
    'Vector over k of mixed_payoff_per_sample.'
    return np.array([mixed_payoff_per_sample(game, player, profile, k)
                     for k in range(game.num_samples)])


def expected_mixed_payoff(game, player, profile, weights=None):
    'sum_k q_k u_i(x | xi_k); weights default to the stored sample weights.'
    if weights is None:
        w = game.sample_weights
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (game.num_samples,):
            raise ValueError("weight vector length must equal the sample count")
    vals = mixed_payoff_samples(game, player, profile)
    return float(w @ vals)


def action_payoff_matrix(game, player, profile):
    '''Per-action payoffs against the opponents: array (K, n_i) with entry
    [k, l] = u_i(a_l, x_{-i} | xi_k).  profile[player] is ignored.'''
    m = game.num_players
    out = np.empty((game.num_samples, game.action_counts[player]))
    for k in range(game.num_samples):
        t = np.moveaxis(game.payoffs[player][k], player, 0)
        for j in range(m - 1, -1, -1):
            if j == player:
                continue
            t = t @ np.asarray(profile[j], dtype=float)
        out[k] = t
    return out


def action_cross_matrix(game, player, other, profile, sample):
    '''Derivative of the per-action payoff vector of `player` w.r.t. the
    strategy of `other`: array (n_i, n_j), contraction over everyone else.'''
    if player == other:
        raise ValueError("player and other must differ")
    m = game.num_players
    t = np.moveaxis(game.payoffs[player][sample], (player, other), (0, 1))
    for j in range(m - 1, -1, -1):
        if j == player or j == other:
            continue
        # after moveaxis the remaining players keep their relative order
        # behind the two leading axes, so contract from the back
        t = t @ np.asarray(profile[j], dtype=float)
    return t


def normalize_payoffs(game):
    '''Rescale each player's payoffs affinely into [0, 1].

    Returns (normalized_game, transforms) where transforms[i] = (lo, span)
    and original = lo + span * normalized.  Constant payoffs get span 1 so
    the transform stays invertible.'''
    new_payoffs = []
    transforms = []
    for per_player in game.payoffs:
        lo = min(float(t.min()) for t in per_player)
        hi = max(float(t.max()) for t in per_player)
        span = hi - lo if hi > lo else 1.0
        new_payoffs.append([(t - lo) / span for t in per_player])
        transforms.append((lo, span))
    return SampledGame(new_payoffs, game.sample_weights), transforms


def is_normalized(game, tol=1e-9):
    'True when every payoff entry already lies in [0, 1].'
    for per_player in game.payoffs:
        for t in per_player:
            if t.min() < -tol or t.max() > 1.0 + tol:
                return False
    return True


# --- JSON game format ------------------------------------------------------
# {"players": m, "actions": [n_1..n_m], "samples": K,
#  "weights": [..K..]            (optional, default uniform),
#  "payoffs": [player][sample][flattened tensor, row-major C order]}

def game_to_json(game):
    'Serialize to the dict form of the JSON game schema.'
    return {
        "players": game.num_players,
        "actions": list(game.action_counts),
        "samples": game.num_samples,
        "weights": [float(w) for w in game.sample_weights],
        "payoffs": [[t.ravel(order="C").tolist() for t in per_player]
                    for per_player in game.payoffs],
    }


def game_from_json(obj):
    'Parse the dict form of the JSON game schema.'
    for field in ("players", "actions", "samples", "payoffs"):
        if field not in obj:
            raise ValueError("game JSON missing field '%s'" % field)
    m = int(obj["players"])
    actions = [int(n) for n in obj["actions"]]
    if len(actions) != m:
        raise ValueError("game JSON: 'actions' must list one count per player")
    K = int(obj["samples"])
    shape = tuple(actions)
    size = int(np.prod(shape))
    raw = obj["payoffs"]
    if len(raw) != m:
        raise ValueError("game JSON: 'payoffs' must have one entry per player")
    payoffs = []
    for i, per_player in enumerate(raw):
        if len(per_player) != K:
            raise ValueError("game JSON: player %d must have %d samples" % (i, K))
        arrs = []
        for flat in per_player:
            if len(flat) != size:
                raise ValueError("game JSON: flattened tensor must have %d entries" % size)
            arrs.append(np.asarray(flat, dtype=float).reshape(shape, order="C"))
        payoffs.append(arrs)
    weights = obj.get("weights")
    return SampledGame(payoffs, weights)


def load_game(path):
    'Read a game from a JSON file.'
    with open(path) as f:
        obj = json.load(f)
    return game_from_json(obj)


def save_game(game, path):
    'Write a game to a JSON file.'
    with open(path, "w") as f:
        json.dump(game_to_json(game), f, indent=1)
        f.write("\n")
