'''Exact risk-averse best responses via linear programming.

For fixed opponent strategies the per-sample payoff of player i is linear in
x_i, so maximizing any of the supported measures is an LP:

  msd   max  sum_l x_l mu_l + gamma_s sum_k P_k z_k
        s.t. sum x = 1,  z_k <= sum_l x_l (U[k,l] - mu_l),  x >= 0, z <= 0

  cvar  max  (1-gamma_c) sum_l x_l mu_l + gamma_c (z + (1/level) sum_k P_k nu_k)
        s.t. sum x = 1,  nu_k <= sum_l x_l U[k,l] - z,  x >= 0, nu <= 0, z free

  md    max  sum_l x_l mu_l + gamma_d sum_k P_k z_k
        s.t. sum x = 1,  z_k <= +-(sum_l x_l (U[k,l] - mu_l)),  x >= 0, z free

where U[k,l] = u_i(a_l, x_{-i} | xi_k) and mu_l = sum_k P_k U[k,l].  The LPs
are solved by an in-repo dense two-phase primal simplex with Bland's rule
(problem sizes here are tiny), and the row duals map straight onto the
equilibrium multipliers lambda_{i,k} and the simplex multiplier, which we
call game_value throughout.

An independent projected supergradient ascent (Danskin direction through the
dual envelope) serves as a second opinion on every best-response value.
'''

from dataclasses import dataclass, field

import numpy as np

from .game_model import action_payoff_matrix, check_strategy, normalize_payoffs
from .risk_measures import RiskSpec, rho_profile, rho_scalar, worst_case_distribution

LP_EPS = 1e-9       # reduced-cost optimality threshold
PIVOT_TOL = 1e-10
VALUE_TOL = 1e-8


class LPError(Exception):
    'Infeasible/unbounded/stalled LP: for BR LPs this indicates a builder bug.'


@dataclass
class LinearProgram:
    '''max objective @ x  s.t.  A x (senses) b,  lower <= x <= upper.

    senses entries are "<=" or "=".  Bounds may be +-inf.
    '''
    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: list
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        m, n = self.A.shape
        if self.objective.shape != (n,) or self.b.shape != (m,):
            raise ValueError("inconsistent LP dimensions")
        if len(self.senses) != m or any(s not in ("<=", "=") for s in self.senses):
            raise ValueError("senses must be '<=' or '=' per row")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.A))
                and np.all(np.isfinite(self.b))):
            raise ValueError("LP coefficients must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bounds must not exceed upper bounds")


@dataclass
class LPSolution:
    x: np.ndarray
    value: float
    duals: np.ndarray            # one per original row; >= 0 on "<=" rows
    reduced_costs: np.ndarray    # objective - A^T duals, per original variable
    gap: float
    iterations: int


def _simplex_core(A, b, c, basis, max_iters):
    '''Primal simplex on  max c x, A x = b, x >= 0  from a feasible basis.

    Bland's rule both ways: entering = lowest-index column with positive
    reduced cost; leaving = among minimum-ratio rows, the one whose basic
    variable has the lowest index.  Refactorizes B each iteration (dense
    solves are cheap at these sizes).
    '''
    m, n = A.shape
    basis = list(basis)
    for it in range(max_iters):
        B = A[:, basis]
        try:
            x_B = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            raise LPError("singular basis matrix")
        d = c - A.T @ y
        d[basis] = 0.0
        entering = -1
        for j in range(n):
            if d[j] > LP_EPS:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n)
            x[basis] = np.maximum(x_B, 0.0)
            return x, y, d, basis, it
        u = np.linalg.solve(B, A[:, entering])
        best_theta = None
        leaving = -1
        for r in range(m):
            if u[r] > PIVOT_TOL:
                theta = max(x_B[r], 0.0) / u[r]
                if best_theta is None or theta < best_theta - 1e-12:
                    best_theta, leaving = theta, r
                elif theta <= best_theta + 1e-12 and basis[r] < basis[leaving]:
                    leaving = r
        if leaving < 0:
            raise LPError("unbounded LP")
        basis[leaving] = entering
    raise LPError("simplex iteration limit hit")


def solve_lp(lp):
    '''Two-phase dense simplex.  Returns primal-dual optimal LPSolution.

    Standard-form conversion: finite lower bounds are shifted to 0, variables
    with only a finite upper bound are negated, free variables are split,
    two-sided bounds add a row; "<=" rows gain slacks; rows with negative rhs
    are sign-flipped (tracked so dual signs come back out right).
    '''
    m, n = lp.A.shape
    cols = []        # columns of the standardized matrix
    col_c = []
    col_map = []     # (original var index or -1 for slack, sign)
    shift = np.zeros(n)
    extra_rows = []  # (var std col added later) two-sided bound rows
    A = lp.A.copy()
    b = lp.b.copy()
    const = 0.0
    for j in range(n):
        lo, up = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            # x = lo + x', x' >= 0
            b = b - A[:, j] * lo
            const += lp.objective[j] * lo
            shift[j] = lo
            cols.append(A[:, j])
            col_c.append(lp.objective[j])
            col_map.append((j, 1.0))
            if np.isfinite(up):
                extra_rows.append((len(cols) - 1, up - lo))
        elif np.isfinite(up):
            # x = up - x'', x'' >= 0
            b = b - A[:, j] * up
            const += lp.objective[j] * up
            shift[j] = up
            cols.append(-A[:, j])
            col_c.append(-lp.objective[j])
            col_map.append((j, -1.0))
        else:
            cols.append(A[:, j])
            col_c.append(lp.objective[j])
            col_map.append((j, 1.0))
            cols.append(-A[:, j])
            col_c.append(-lp.objective[j])
            col_map.append((j, -1.0))
    n_rows = m + len(extra_rows)
    A_std = np.zeros((n_rows, len(cols)))
    for jc, col in enumerate(cols):
        A_std[:m, jc] = col
    b_std = np.concatenate([b, [rhs for _, rhs in extra_rows]])
    senses = list(lp.senses)
    for r, (jc, _) in enumerate(extra_rows):
        A_std[m + r, jc] = 1.0
        senses.append("<=")
    c_std = np.array(col_c)
    # slacks for inequality rows
    for r in range(n_rows):
        if senses[r] == "<=":
            col = np.zeros(n_rows)
            col[r] = 1.0
            A_std = np.hstack([A_std, col[:, None]])
            c_std = np.append(c_std, 0.0)
    # flip rows with negative rhs so phase 1 can start from the identity
    sigma = np.ones(n_rows)
    for r in range(n_rows):
        if b_std[r] < 0:
            sigma[r] = -1.0
            A_std[r] *= -1.0
            b_std[r] *= -1.0
    n_real = A_std.shape[1]
    max_iters = 1000 + 200 * (n_rows + n_real)
    # phase 1: maximize minus the artificial mass
    A1 = np.hstack([A_std, np.eye(n_rows)])
    c1 = np.concatenate([np.zeros(n_real), -np.ones(n_rows)])
    basis = list(range(n_real, n_real + n_rows))
    x1, _, _, basis, it1 = _simplex_core(A1, b_std, c1, basis, max_iters)
    if float(c1 @ x1) < -1e-8:
        raise LPError("infeasible LP")
    # drive surviving artificials out of the basis (or drop redundant rows)
    keep = list(range(n_rows))
    for r in range(n_rows):
        if basis[r] >= n_real:
            B = A1[:, basis]
            row = np.linalg.solve(B.T, np.eye(n_rows)[:, r]) @ A_std
            pivot = -1
            for j in range(n_real):
                if j not in basis and abs(row[j]) > 1e-9:
                    pivot = j
                    break
            if pivot >= 0:
                basis[r] = pivot
            else:
                keep.remove(r)
    if len(keep) < n_rows:
        rows_kept = np.array(keep, dtype=int)
        A_std = A_std[rows_kept]
        b_std = b_std[rows_kept]
        sigma = sigma[rows_kept]
        basis = [basis[r] for r in keep]
        row_origin = [r for r in keep]
    else:
        row_origin = list(range(n_rows))
    x_std, y_std, _, basis, it2 = _simplex_core(A_std, b_std, c_std, basis, max_iters)
    value_std = float(c_std @ x_std)
    gap = abs(value_std - float(y_std @ b_std))
    # map back: primal values, row duals (sign-unflipped), reduced costs
    x = shift.copy()
    for jc, (j, sign) in enumerate(col_map):
        x[j] += sign * x_std[jc]
    duals = np.zeros(n_rows)
    for pos, r in enumerate(row_origin):
        duals[r] = sigma[pos] * y_std[pos]
    duals = duals[:m]
    reduced = lp.objective - lp.A.T @ duals
    return LPSolution(x=x, value=value_std + const, duals=duals,
                      reduced_costs=reduced, gap=gap, iterations=it1 + it2)


# --- best-response LP builders ---------------------------------------------

def full_profile(game, player, opponents):
    'Insert a uniform placeholder for `player` among the opponent strategies.'
    if len(opponents) != game.num_players - 1:
        raise ValueError("opponents must hold one strategy per other player")
    n = game.action_counts[player]
    profile = list(opponents[:player]) + [np.full(n, 1.0 / n)] + list(opponents[player:])
    return [check_strategy(s, c) for s, c in zip(profile, game.action_counts)]


def _payoff_columns(game, player, opponents):
    'U (K, n_i) against the fixed opponents, and per-action means mu (n_i,).'
    profile = full_profile(game, player, opponents)
    U = action_payoff_matrix(game, player, profile)
    mu = game.sample_weights @ U
    return U, mu


def build_msd_lp(game, player, opponents, gamma_s):
    'Mean-semideviation best-response LP; variables (x >= 0, z <= 0).'
    if not 0.0 <= gamma_s <= 1.0:
        raise ValueError("gamma_s must lie in [0, 1]")
    U, mu = _payoff_columns(game, player, opponents)
    K, n = U.shape
    w = game.sample_weights
    c = np.concatenate([mu, gamma_s * w])
    A = np.zeros((1 + K, n + K))
    b = np.zeros(1 + K)
    A[0, :n] = 1.0
    b[0] = 1.0
    senses = ["="] + ["<="] * K
    # z_k - sum_l x_l (U[k,l] - mu_l) <= 0
    A[1:, :n] = -(U - mu)
    A[1:, n:] = np.eye(K)
    lower = np.concatenate([np.zeros(n), np.full(K, -np.inf)])
    upper = np.concatenate([np.full(n, np.inf), np.zeros(K)])
    return LinearProgram(c, A, b, senses, lower, upper)


def build_cvar_lp(game, player, opponents, gamma_c, cvar_level):
    'CVaR-mix best-response LP; variables (x >= 0, z free, nu <= 0).'
    if not 0.0 <= gamma_c <= 1.0:
        raise ValueError("gamma_c must lie in [0, 1]")
    if not 0.0 < cvar_level < 1.0:
        raise ValueError("cvar_level must lie in (0, 1)")
    U, mu = _payoff_columns(game, player, opponents)
    K, n = U.shape
    w = game.sample_weights
    c = np.concatenate([(1.0 - gamma_c) * mu, [gamma_c], (gamma_c / cvar_level) * w])
    A = np.zeros((1 + K, n + 1 + K))
    b = np.zeros(1 + K)
    A[0, :n] = 1.0
    b[0] = 1.0
    senses = ["="] + ["<="] * K
    # nu_k - sum_l x_l U[k,l] + z <= 0
    A[1:, :n] = -U
    A[1:, n] = 1.0
    A[1:, n + 1:] = np.eye(K)
    lower = np.concatenate([np.zeros(n), [-np.inf], np.full(K, -np.inf)])
    upper = np.concatenate([np.full(n, np.inf), [np.inf], np.zeros(K)])
    return LinearProgram(c, A, b, senses, lower, upper)


def build_md_lp(game, player, opponents, gamma_d):
    '''Mean-deviation best-response LP; variables (x >= 0, z free).

    Derivation (two-sided analog of the msd LP): with d_k(x) = sum_l x_l
    (U[k,l] - mu_l), the md objective is sum x mu - gamma_d sum_k P_k |d_k|.
    Writing z_k = -|d_k| as z_k <= d_k and z_k <= -d_k and maximizing
    sum x mu + gamma_d sum_k P_k z_k makes both constraints active exactly
    when needed; the two row duals lambda+ and lambda- satisfy
    lambda+_k + lambda-_k = gamma_d P_k because z is free.
    '''
    if not 0.0 <= gamma_d <= 0.5:
        raise ValueError("gamma_d must lie in [0, 1/2]")
    U, mu = _payoff_columns(game, player, opponents)
    K, n = U.shape
    w = game.sample_weights
    c = np.concatenate([mu, gamma_d * w])
    A = np.zeros((1 + 2 * K, n + K))
    b = np.zeros(1 + 2 * K)
    A[0, :n] = 1.0
    b[0] = 1.0
    senses = ["="] + ["<="] * (2 * K)
    # z_k - d_k <= 0   and   z_k + d_k <= 0
    A[1:1 + K, :n] = -(U - mu)
    A[1:1 + K, n:] = np.eye(K)
    A[1 + K:, :n] = U - mu
    A[1 + K:, n:] = np.eye(K)
    lower = np.concatenate([np.zeros(n), np.full(K, -np.inf)])
    upper = np.full(n + K, np.inf)
    return LinearProgram(c, A, b, senses, lower, upper)


@dataclass
class BestResponseResult:
    strategy: np.ndarray
    value: float
    multipliers: dict = field(default_factory=dict)
    auxiliaries: dict = field(default_factory=dict)


def best_response(game, player, opponents, spec):
    '''Exact best response of `player` against fixed opponents.

    Returns the LP vertex (the optimal face may be larger; no uniqueness is
    promised), the optimal value, and the LP duals renamed to the multiplier
    conventions used by the complementarity module: lambda per sample (or
    lambda_plus/lambda_minus for md), game_value for the simplex row, beta
    for the nonnegativity reduced costs.
    '''
    n = game.action_counts[player]
    K = game.num_samples
    if spec.kind == "mean" or (spec.kind in ("msd", "md", "cvar") and spec.gamma == 0.0):
        lp = build_msd_lp(game, player, opponents, 0.0)
    elif spec.kind == "msd":
        lp = build_msd_lp(game, player, opponents, spec.gamma)
    elif spec.kind == "md":
        lp = build_md_lp(game, player, opponents, spec.gamma)
    elif spec.kind == "cvar":
        lp = build_cvar_lp(game, player, opponents, spec.gamma, spec.cvar_level)
    else:
        raise ValueError("no best-response LP for kind %r" % (spec.kind,))
    sol = solve_lp(lp)
    x = np.maximum(sol.x[:n], 0.0)
    x = x / x.sum()
    game_value = float(sol.duals[0])
    beta = -sol.reduced_costs[:n]
    multipliers = {"game_value": game_value, "beta": beta}
    auxiliaries = {}
    if spec.kind == "md" and spec.gamma > 0.0:
        multipliers["lambda_plus"] = sol.duals[1:1 + K].copy()
        multipliers["lambda_minus"] = sol.duals[1 + K:].copy()
        auxiliaries["z"] = sol.x[n:].copy()
    elif spec.kind == "cvar" and spec.gamma > 0.0:
        multipliers["lambda"] = sol.duals[1:].copy()
        auxiliaries["z"] = float(sol.x[n])
        auxiliaries["nu"] = sol.x[n + 1:].copy()
    else:
        multipliers["lambda"] = sol.duals[1:].copy()
        auxiliaries["z"] = sol.x[n:].copy()
    return BestResponseResult(strategy=x, value=sol.value,
                              multipliers=multipliers, auxiliaries=auxiliaries)


def epsilon_dre_gap(game, profile, specs):
    'Per-player improvement gaps: best-response value minus current value.'
    if len(specs) != game.num_players:
        raise ValueError("one RiskSpec per player required")
    gaps = np.zeros(game.num_players)
    for i in range(game.num_players):
        opponents = [profile[j] for j in range(game.num_players) if j != i]
        br = best_response(game, i, opponents, specs[i])
        gaps[i] = br.value - rho_profile(game, i, profile, specs[i])
    return gaps


# --- independent oracle: projected supergradient ascent ---------------------

def project_simplex(v):
    'Euclidean projection onto the probability simplex (sort-based).'
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u > css / idx)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def _concave_line_max(f, lo, hi, iters=90):
    'Ternary search for the max of a concave 1-d function on [lo, hi].'
    best_t, best_v = lo, f(lo)
    v_hi = f(hi)
    if v_hi > best_v:
        best_t, best_v = hi, v_hi
    for _ in range(iters):
        if hi - lo <= 1e-14:
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        v1, v2 = f(m1), f(m2)
        if v1 > best_v:
            best_t, best_v = m1, v1
        if v2 > best_v:
            best_t, best_v = m2, v2
        if v1 < v2:
            lo = m1
        elif v1 > v2:
            hi = m2
        else:
            lo, hi = m1, m2
    return best_t, best_v


def _edge_polish(f, x, val, sweeps=50):
    '''Coordinate-pair ascent over simplex edge directions e_i - e_j with an
    exact concave line max per direction.  Subgradient iterates zigzag
    across nearly-flat kink ridges instead of sliding along them; the line
    searches walk the ridge itself and land on face optima that no support
    snap can reach.'''
    x = x.copy()
    n = x.size
    for _ in range(sweeps):
        gained = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                lo_t, hi_t = -x[i], x[j]
                if hi_t - lo_t <= 1e-14:
                    continue
                d = np.zeros(n)
                d[i], d[j] = 1.0, -1.0
                t, v = _concave_line_max(lambda t: f(x + t * d), lo_t, hi_t)
                if v > val:
                    gained += v - val
                    x = np.maximum(x + t * d, 0.0)
                    x /= x.sum()
                    val = v
        if gained <= 1e-14:
            break
    return x, val


def supergradient_ascent(game, player, opponents, spec, steps=20000, seed=0):
    '''Projected supergradient ascent on rho_i(., x_{-i}).

    Payoffs are normalized to [0,1] internally so the 1/sqrt(t) step size is
    well scaled; the value maps back affinely (translation equivariance plus
    positive homogeneity).  Supergradient by Danskin: at the envelope's
    worst-case q*, grad = U^T q*.  Reports the best of several candidate
    points, each scored by its true rho: the best iterate seen, the tail
    average of the second half, support-snapped copies of both (tiny
    coordinates zeroed, renormalized -- subgradient iterates crawl along
    nearly-flat ridges, and snapping jumps to the face they are crawling
    toward), and the simplex vertices.  The winning candidate is then
    refined by exact concave line searches along simplex edge directions
    (_edge_polish).  Every candidate is feasible, so the reported value is
    always a valid lower bound on the optimum.  No multiplier certificates.
    '''
    if steps < 1:
        raise ValueError("steps must be >= 1")
    norm_game, transforms = normalize_payoffs(game)
    lo, span = transforms[player]
    U, _ = _payoff_columns(norm_game, player, opponents)
    w = norm_game.sample_weights
    n = U.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    x = rng.dirichlet(np.ones(n))
    best_x, best_val = x.copy(), -np.inf
    tail_sum = np.zeros(n)
    tail_count = 0
    tail_start = steps // 2
    for t in range(1, steps + 1):
        cert = worst_case_distribution(spec, U @ x, w)
        if cert.value > best_val:
            best_val, best_x = cert.value, x.copy()
        g = U.T @ cert.q
        x = project_simplex(x + g / np.sqrt(t))
        if t > tail_start:
            tail_sum += x
            tail_count += 1
    avg = tail_sum / tail_count
    candidates = [avg]
    for point in (best_x, avg):
        for thresh in (1e-6, 1e-3, 1e-2, 5e-2):
            snapped = np.where(point > thresh, point, 0.0)
            total = snapped.sum()
            if total > 0.0:
                candidates.append(snapped / total)
    candidates.extend(np.eye(n))
    for cand in candidates:
        val = rho_scalar(spec, U @ cand, w)
        if val > best_val:
            best_x, best_val = cand, val
    best_x, best_val = _edge_polish(
        lambda x: rho_scalar(spec, U @ x, w), best_x, best_val)
    return BestResponseResult(strategy=best_x, value=lo + span * best_val)
