'''Concentration bounds for empirical risk statistics, the approximation-loss
term B for risk-averse equilibria, and Monte Carlo coverage validation.

Conventions: payoffs live in [0, 1] (coverage_experiment enforces this on the
ground-truth game), K is the number of sampled payoff tensors, delta the
failure probability.  The dependent-data variants take a stability
coefficient delta_K in [0, 1] supplied by the caller; it measures how much
the strategy mapping can move when one sample is replaced, which is not
computable in general.  A fixed (data-independent) profile has delta_K = 0,
which is the regime the coverage experiments run in.

A ground-truth game is an ordinary SampledGame whose sample weights are read
as the true probabilities of a finite-support payoff distribution; population
statistics are then exact sums, with no sampling error in the reference
values.
'''

from dataclasses import dataclass

import numpy as np

from .game_model import mixed_payoff_samples
from .risk_measures import cvar as cvar_statistic


@dataclass(frozen=True)
class BoundInputs:
    K: int
    delta: float
    num_profiles: int = 1
    cvar_level: float = None
    gamma: float = 0.0
    delta_K: float = 0.0
    variance: float = None
    mad_true: float = None
    mean_true: float = None
    cvar_true: float = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.num_profiles < 1:
            raise ValueError("num_profiles must be at least 1")
        if not 0.0 <= self.delta_K <= 1.0:
            raise ValueError("delta_K must lie in [0, 1]")
        if self.cvar_level is not None and not 0.0 < self.cvar_level < 1.0:
            raise ValueError("cvar_level must lie in (0, 1)")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")


def _check_kd(K, delta):
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def hoeffding_mean_bound(K, delta, num_profiles=1):
    '''Uniform deviation of empirical means over num_profiles payoff cells,
    each in [0,1]: sqrt(ln(4 num_profiles / delta) / (2K)), holding with
    probability at least 1 - delta/2.'''
    _check_kd(K, delta)
    return np.sqrt(np.log(4.0 * num_profiles / delta) / (2.0 * K))


def mad_bound_fixed(K, delta, variance):
    '''Deviation of the empirical mean absolute deviation for i.i.d. samples
    at a fixed profile: sqrt(2 ln(2/delta)/K) + sqrt(variance/K).'''
    _check_kd(K, delta)
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    return np.sqrt(2.0 * np.log(2.0 / delta) / K) + np.sqrt(variance / K)


def mad_bound_dependent(K, delta, variance, delta_K):
    '''MAD deviation with a data-dependent profile: the Hoeffding-style term
    is inflated by (1 + (K-1) delta_K).  At delta_K = 1 the factor is K and
    the bound grows like sqrt(K) -- vacuous for large K, as expected when
    the profile can chase individual samples.'''
    _check_kd(K, delta)
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    if not 0.0 <= delta_K <= 1.0:
        raise ValueError("delta_K must lie in [0, 1]")
    return np.sqrt(variance / K) \
        + np.sqrt(2.0 * np.log(2.0 / delta) / K) * (1.0 + (K - 1.0) * delta_K)


def cvar_bound_fixed(K, delta, cvar_level):
    '''Deviation of empirical lower-tail CVaR at a fixed profile:
    (1/cvar_level) sqrt(ln(2/delta) / (2K)).  Halving the level doubles
    the bound.'''
    _check_kd(K, delta)
    if not 0.0 < cvar_level <= 1.0:
        raise ValueError("cvar_level must lie in (0, 1]")
    return np.sqrt(np.log(2.0 / delta) / (2.0 * K)) / cvar_level


def cvar_bound_dependent(K, delta, cvar_level, delta_K):
    '''CVaR deviation with a data-dependent profile:
    1 + (delta_K/cvar_level + (1+(K-1)delta_K)/(cvar_level K))
        * sqrt((K/2) ln(2/delta)).
    Never below 1 because of the additive constant.'''
    _check_kd(K, delta)
    if not 0.0 < cvar_level <= 1.0:
        raise ValueError("cvar_level must lie in (0, 1]")
    if not 0.0 <= delta_K <= 1.0:
        raise ValueError("delta_K must lie in [0, 1]")
    coef = delta_K / cvar_level \
        + (1.0 + (K - 1.0) * delta_K) / (cvar_level * K)
    return 1.0 + coef * np.sqrt(0.5 * K * np.log(2.0 / delta))


def _stat(population_stats, inputs, key, field):
    if population_stats is not None and key in population_stats:
        return population_stats[key]
    value = getattr(inputs, field)
    if value is None:
        raise ValueError("population statistic %r required" % key)
    return value


def approx_loss_B(spec, inputs, population_stats=None):
    '''Risk-part approximation loss B for the excess-suboptimality bound.

    population_stats may supply {"mad", "variance", "mean", "cvar"}; any
    missing entry falls back to the matching BoundInputs field.  Measures:

      msd:  (1/2)(MAD + sqrt(V/K) + sqrt(2 ln(2/delta)/K)(1+(K-1)delta_K))
      md:   the same expression without the 1/2
      cvar: mean + sqrt(ln(4 num_profiles/delta)/2K) + cvar + 1
            + (delta_K/lvl + (1+(K-1)delta_K)/(lvl K)) sqrt((K/2) ln(4/delta))
      mean: 0 (no risk part)

    Note the cvar tail term uses ln(4/delta): the overall event intersection
    spends delta/2 on the mean block and delta/2 on the risk block, each of
    which splits in two again.
    '''
    K, delta, dK = inputs.K, inputs.delta, inputs.delta_K
    if spec.kind == "mean":
        return 0.0
    if spec.kind in ("msd", "md"):
        mad = _stat(population_stats, inputs, "mad", "mad_true")
        var = _stat(population_stats, inputs, "variance", "variance")
        core = mad + np.sqrt(var / K) \
            + np.sqrt(2.0 * np.log(2.0 / delta) / K) * (1.0 + (K - 1.0) * dK)
        return 0.5 * core if spec.kind == "msd" else core
    if spec.kind == "cvar":
        lvl = spec.cvar_level if spec.cvar_level is not None \
            else inputs.cvar_level
        if lvl is None:
            raise ValueError("cvar_level required for the cvar bound")
        mean = _stat(population_stats, inputs, "mean", "mean_true")
        cv = _stat(population_stats, inputs, "cvar", "cvar_true")
        coef = dK / lvl + (1.0 + (K - 1.0) * dK) / (lvl * K)
        return mean + hoeffding_mean_bound(K, delta, inputs.num_profiles) \
            + cv + 1.0 + coef * np.sqrt(0.5 * K * np.log(4.0 / delta))
    raise ValueError("no approximation-loss bound for kind %r" % spec.kind)


def excess_suboptimality_bound(spec, inputs, population_stats=None):
    '''Full excess bound 2 sqrt(ln(4 num_profiles/delta)/2K) + gamma B,
    holding with probability at least 1 - 2 delta.  With gamma = 0 this is
    the Hoeffding term alone; with gamma ~ 1/K the risk part vanishes as K
    grows.'''
    base = 2.0 * hoeffding_mean_bound(inputs.K, inputs.delta,
                                      inputs.num_profiles)
    if spec.kind == "mean" or spec.gamma == 0.0:
        return base
    return base + spec.gamma * approx_loss_B(spec, inputs, population_stats)


def population_statistics(truth, player, profile, cvar_level=None):
    '''Exact statistics of u_player(profile | xi) under the truth weights:
    mean, variance, mad, and (when cvar_level is given) lower-tail cvar.'''
    vals = mixed_payoff_samples(truth, player, profile)
    w = truth.sample_weights
    mean = float(w @ vals)
    out = {
        "mean": mean,
        "variance": float(w @ (vals - mean) ** 2),
        "mad": float(w @ np.abs(vals - mean)),
    }
    if cvar_level is not None:
        out["cvar"] = cvar_statistic(vals, w, cvar_level)
    return out


@dataclass
class CoverageResult:
    statistic: str
    K: int
    delta: float
    trials: int
    bound: float
    coverage: float
    threshold: float
    passed: bool
    deviations: np.ndarray
    within: np.ndarray


def coverage_experiment(truth, profile, statistic, K, delta, trials, seed,
                        cvar_level=0.3, player=0):
    '''Monte Carlo check that a fixed-profile bound covers its statistic.

    Draws `trials` datasets of K i.i.d. samples from truth.weights, computes
    |empirical - population| for the chosen statistic of u_player(profile),
    and compares against the matching fixed-profile bound.  The pass line is
    coverage >= 1 - delta - 3 sqrt(delta(1-delta)/trials): the bounds are
    conservative, so over-coverage is fine and only a 3-sigma shortfall
    (under the binomial null at exactly 1 - delta) fails.

    Per-trial RNG streams are derived from (seed, trial index), so results
    do not depend on execution order.
    '''
    if trials < 100:
        raise ValueError("trials must be at least 100")
    if statistic not in ("mean", "mad", "cvar"):
        raise ValueError("statistic must be one of mean|mad|cvar")
    vals = mixed_payoff_samples(truth, player, profile)
    if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
        raise ValueError("truth payoffs at the profile must lie in [0, 1]")
    w = truth.sample_weights
    pop = population_statistics(truth, player, profile, cvar_level=cvar_level)
    if statistic == "mean":
        target = pop["mean"]
        bound = float(hoeffding_mean_bound(K, delta, num_profiles=1))
    elif statistic == "mad":
        target = pop["mad"]
        bound = float(mad_bound_fixed(K, delta, pop["variance"]))
    else:
        target = pop["cvar"]
        bound = float(cvar_bound_fixed(K, delta, cvar_level))
    uniform = np.full(K, 1.0 / K)
    n_atoms = vals.size
    deviations = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        draw = vals[rng.choice(n_atoms, size=K, p=w)]
        if statistic == "mean":
            emp = draw.mean()
        elif statistic == "mad":
            emp = np.abs(draw - draw.mean()).mean()
        else:
            emp = cvar_statistic(draw, uniform, cvar_level)
        deviations[t] = abs(emp - target)
    within = deviations <= bound + 1e-15
    coverage = float(within.mean())
    threshold = 1.0 - delta - 3.0 * np.sqrt(delta * (1.0 - delta) / trials)
    return CoverageResult(statistic=statistic, K=K, delta=delta,
                          trials=trials, bound=bound, coverage=coverage,
                          threshold=threshold,
                          passed=coverage >= threshold,
                          deviations=deviations, within=within)
