'''Coherent utility measures on finite-support payoff distributions.

Reward-side functionals: larger is better, concave, monotone, translation
equivariant, positively homogeneous.  Supported kinds:

  mean    E[X]
  msd     E[X] - gamma * E[max(0, E[X] - X)],          gamma in [0, 1]
  md      E[X] - gamma * E|X - E[X]|,                  gamma in [0, 1/2]
  cvar    (1-gamma) E[X] + gamma * CVaR_level[X],      gamma in [0, 1]
  msd_p   E[X] - gamma * ||max(0, E[X] - X)||_p,       gamma in [0, 1], p > 1

Each measure except msd_p also exposes its dual envelope: the worst-case
reweighting q of the sample atoms with rho(X) = min_q sum_k q_k X_k.  The
CVaR level is always called cvar_level here; "level" never doubles as a
simplex multiplier.
'''

from dataclasses import dataclass

import numpy as np

TIE_TOL = 1e-12     # "at or below the mean / quantile" comparisons
BOX_TOL = 1e-9
VALUE_TOL = 1e-8

KINDS = ("mean", "msd", "md", "cvar", "msd_p")


@dataclass(frozen=True)
class RiskSpec:
    kind: str
    gamma: float = 0.0
    cvar_level: float = None
    p_order: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown kind %r" % (self.kind,))
        g = self.gamma
        if self.kind in ("msd", "msd_p", "cvar") and not 0.0 <= g <= 1.0:
            raise ValueError("gamma must lie in [0, 1] for %s" % self.kind)
        if self.kind == "md" and not 0.0 <= g <= 0.5:
            raise ValueError("gamma must lie in [0, 1/2] for md")
        if self.kind == "cvar":
            if self.cvar_level is None or not 0.0 < self.cvar_level < 1.0:
                raise ValueError("cvar kind needs cvar_level strictly in (0, 1)")
        if self.kind == "msd_p":
            if self.p_order is None or not self.p_order > 1.0:
                raise ValueError("msd_p kind needs p_order > 1")


def spec_to_json(spec):
    out = {"kind": spec.kind, "gamma": spec.gamma}
    if spec.cvar_level is not None:
        out["alpha"] = spec.cvar_level
    if spec.p_order is not None:
        out["p"] = spec.p_order
    return out


def spec_from_json(obj):
    return RiskSpec(kind=obj["kind"], gamma=float(obj.get("gamma", 0.0)),
                    cvar_level=(float(obj["alpha"]) if "alpha" in obj else None),
                    p_order=(float(obj["p"]) if "p" in obj else None))


def _check_values(values, weights):
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if w.shape != v.shape:
        raise ValueError("weights must match values in length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    return v, w


def _take_given(v, w, cvar_level):
    take = np.zeros_like(w)
    remaining = cvar_level
    for idx in np.argsort(v, kind="stable"):
        if remaining <= 0.0:
            break
        grab = min(w[idx], remaining)
        take[idx] = grab
        remaining -= grab
    return take


def lower_tail_take(values, weights, cvar_level):
    '''Fractional allocation of the lowest cvar_level probability mass.

    Sorts atoms ascending (stable, so equal values keep index order) and
    fills mass until cvar_level is reached, splitting the boundary atom.
    Returns the take vector t with 0 <= t <= weights and sum(t) = cvar_level.
    '''
    v, w = _check_values(values, weights)
    if not 0.0 < cvar_level < 1.0 + TIE_TOL:
        raise ValueError("cvar_level must lie in (0, 1]")
    return _take_given(v, w, cvar_level)


def cvar(values, weights, cvar_level):
    'Discrete CVaR at level cvar_level: mean of the worst cvar_level mass.'
    take = lower_tail_take(values, weights, cvar_level)
    return float(take @ np.asarray(values, dtype=float)) / cvar_level


def _rho_given(spec, v, w, mu):
    'Measure value from already-validated arrays and their mean.'
    g = spec.gamma
    if spec.kind == "mean" or g == 0.0:
        return mu
    if spec.kind == "msd":
        return mu - g * float(w @ np.maximum(0.0, mu - v))
    if spec.kind == "md":
        return mu - g * float(w @ np.abs(v - mu))
    if spec.kind == "cvar":
        take = _take_given(v, w, spec.cvar_level)
        return (1.0 - g) * mu + (g / spec.cvar_level) * float(take @ v)
    if spec.kind == "msd_p":
        p = spec.p_order
        return mu - g * float(w @ np.maximum(0.0, mu - v) ** p) ** (1.0 / p)
    raise ValueError("unknown kind %r" % (spec.kind,))


def rho_scalar(spec, values, weights):
    'Evaluate the measure on the discrete distribution (values, weights).'
    v, w = _check_values(values, weights)
    return _rho_given(spec, v, w, float(w @ v))


def rho_profile(game, player, profile, spec):
    'rho applied to the K per-sample mixed payoffs of one player.'
    from .game_model import mixed_payoff_samples
    vals = mixed_payoff_samples(game, player, profile)
    return rho_scalar(spec, vals, game.sample_weights)


@dataclass(frozen=True)
class EnvelopeCertificate:
    q: np.ndarray       # worst-case distribution over samples
    value: float        # rho(X)
    slack: float        # |value - q @ X|


def worst_case_distribution(spec, values, weights):
    '''Minimizer q of sum_k q_k X_k over the measure's dual envelope.

    mean   singleton {weights}
    msd    q_k = w_k (1 + gamma (eta_k - E eta)),  eta_k = 1 iff X_k <= mean
    md     q_k = w_k (1 + gamma (s_k - E s)),      s_k = -sign(X_k - mean)
    cvar   q_k = (1-gamma) w_k + lambda_k, lambda = (gamma/level) * lower take

    Ties sit within TIE_TOL of the mean; tied msd atoms get eta = 1 (their
    objective coefficient vanishes so any tie value gives the same minimum).
    '''
    v, w = _check_values(values, weights)
    mu = float(w @ v)
    g = spec.gamma
    if spec.kind == "mean" or g == 0.0:
        q = w.copy()
    elif spec.kind == "msd":
        eta = (v <= mu + TIE_TOL).astype(float)
        q = w * (1.0 + g * (eta - float(w @ eta)))
    elif spec.kind == "md":
        s = np.where(v > mu + TIE_TOL, -1.0,
                     np.where(v < mu - TIE_TOL, 1.0, 0.0))
        q = w * (1.0 + g * (s - float(w @ s)))
    elif spec.kind == "cvar":
        lam = (g / spec.cvar_level) * _take_given(v, w, spec.cvar_level)
        q = (1.0 - g) * w + lam
    else:
        raise ValueError("no envelope for kind %r" % (spec.kind,))
    value = _rho_given(spec, v, w, mu)
    return EnvelopeCertificate(q=q, value=value, slack=abs(value - float(q @ v)))


def verify_envelope(spec, weights, cert, values):
    '''Per-constraint membership report for an envelope certificate.

    Checks q is a probability vector, lies in the kind-specific envelope
    (box/spread constraints within BOX_TOL), and prices the atoms to
    cert.value within VALUE_TOL.  Returns a dict of booleans with an
    aggregate under "ok".
    '''
    v, w = _check_values(values, weights)
    q = np.asarray(cert.q, dtype=float)
    if q.shape != w.shape:
        raise ValueError("certificate q must match weights in length")
    g = spec.gamma
    report = {
        "nonnegative": bool(np.all(q >= -BOX_TOL)),
        "sums_to_one": bool(abs(q.sum() - 1.0) <= BOX_TOL),
    }
    if spec.kind == "mean" or g == 0.0:
        report["box"] = bool(np.max(np.abs(q - w)) <= BOX_TOL)
    elif spec.kind in ("msd", "md"):
        # q_k = w_k (1 + g c_k) with c_k = eta_k - E[eta]; eta ranges over
        # [0,1] (msd) or [-1,1] (md), so c needs spread <= 1 resp. <= 2
        pos = w > 0
        ok = bool(np.all(np.abs(q[~pos]) <= BOX_TOL))
        if np.any(pos):
            c = (q[pos] / w[pos] - 1.0) / g
            spread = float(c.max() - c.min())
            width = 1.0 if spec.kind == "msd" else 2.0
            ok = ok and spread <= width + BOX_TOL
        report["box"] = ok
    elif spec.kind == "cvar":
        lam = q - (1.0 - g) * w
        cap = (g / spec.cvar_level) * w
        report["box"] = bool(np.all(lam >= -BOX_TOL)
                             and np.all(lam <= cap + BOX_TOL)
                             and abs(lam.sum() - g) <= BOX_TOL)
    else:
        raise ValueError("no envelope for kind %r" % (spec.kind,))
    report["value_match"] = bool(abs(float(q @ v) - cert.value) <= VALUE_TOL)
    report["ok"] = all(report.values())
    return report
