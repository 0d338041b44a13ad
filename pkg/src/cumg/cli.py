'''Command-line front end: game I/O, experiment harnesses, CSV emission.

Subcommands (all invoked as `cumg <subcommand> --config cfg.json`):

  oos_pd         small-sample out-of-sample study on a three-table 2x2 game
  coord_sweep    pure-equilibrium threshold sweep on the coordination game
  cvar_sweep     closed form vs solver on the cvar example game
  validate       run every closed-form-vs-pipeline check
  bounds         print concentration-bound tables over (K, delta) grids
  coverage       Monte Carlo coverage of a fixed-profile bound
  solve          equilibrium solve of a game JSON
  best_response  single-player risk-averse best response

Determinism contract: all randomness flows through numpy's PCG64 generator
(`numpy.random.default_rng`) seeded with explicit SeedSequence entropy lists;
streams are split per (seed, replication, purpose), so identical config and
seed give byte-identical CSV output regardless of execution order.  Floats
are written with 17 significant digits.  Exit codes: 0 success, 1 check
failure, 2 usage or config errors.
'''

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from .game_model import (SampledGame, load_game, mixed_payoff_samples)
from .risk_measures import RiskSpec, rho_profile, spec_from_json
from .best_response import best_response, epsilon_dre_gap
from .complementarity import SolveFailed, solve_game, solution_to_json
from .closed_forms import (CoordinationParams, CvarExampleParams,
                           coordination_game, cvar_example_game,
                           cvar_example_solution, msd_coordination_payoff,
                           msd_pure_equilibrium_threshold, validate_all)
from .bounds import (cvar_bound_dependent, cvar_bound_fixed,
                     coverage_experiment, hoeffding_mean_bound,
                     mad_bound_dependent, mad_bound_fixed)

FLOAT_FMT = "%.17g"
EXPERIMENTS = ("oos_pd", "coord_sweep", "cvar_sweep", "validate", "bounds",
               "coverage", "solve", "best_response")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    game_path: str = None
    spec: RiskSpec = None
    gamma_grid: list = None
    alpha_grid: list = None
    p_hat_grid: list = None
    K: int = 5
    replications: int = 100
    test_samples: int = 10000
    seed: int = 0
    output_path: str = None
    surface_grid: int = None    # coord_sweep: also emit rho-surface CSVs
    grid_size: int = 21         # validate
    player: int = 0             # best_response
    opponents: list = None      # best_response: other players' strategies
    profile: list = None        # coverage: fixed evaluation profile
    statistic: str = "mean"     # coverage: mean | mad | cvar
    delta: float = 0.1
    trials: int = 2000
    cvar_level: float = 0.3
    delta_K: float = 0.0
    variance: float = 0.25      # bounds table: worst case for [0,1] payoffs
    K_grid: list = None
    delta_grid: list = None
    num_profiles: int = 4
    starts: int = 32

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("unknown experiment %r" % self.experiment)
        if self.K < 1 or self.replications < 1:
            raise ConfigError("K and replications must be at least 1")
        if self.statistic not in ("mean", "mad", "cvar"):
            raise ConfigError("statistic must be one of mean|mad|cvar")
        for name in ("gamma_grid", "alpha_grid", "p_hat_grid"):
            grid = getattr(self, name)
            if grid is not None and len(grid) == 0:
                raise ConfigError("%s must be nonempty when given" % name)


def parse_config(path, experiment):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s: invalid JSON at line %d column %d: %s"
                          % (path, exc.lineno, exc.colno, exc.msg))
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError("unknown config fields: %s" % ", ".join(unknown))
    if "spec" in raw and raw["spec"] is not None:
        try:
            raw["spec"] = spec_from_json(raw["spec"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("config field 'spec': %s" % exc)
    declared = raw.pop("experiment", experiment)
    if declared != experiment:
        raise ConfigError("config declares experiment %r but subcommand is %r"
                          % (declared, experiment))
    try:
        return ExperimentConfig(experiment=experiment, **raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT % x
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _solver_seed(*parts):
    'Deterministic 64-bit solver seed from an entropy tuple.'
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


# --- oos_pd ------------------------------------------------------------------

def pd_truth_game():
    '''Ground-truth 2x2 social-dilemma distribution over three payoff tables:
    a typical prisoner's dilemma (probability 1/2), a deadlock variant (1/4)
    and an externality-evidence variant (1/4).  Action 0 = cooperate.'''
    t1 = np.array([[3.0, 0.0], [5.0, 1.0]])
    t2 = np.array([[3.0, 5.0], [0.0, 1.0]])
    d = np.array([[3.0, 0.0], [0.0, 0.0]])
    e = np.array([[0.0, 0.0], [0.0, 1.0]])
    return SampledGame([[t1, d, e], [t2, d, e]], [0.5, 0.25, 0.25])


def _draw_game(truth, K, rng):
    idx = rng.choice(truth.num_samples, size=K, p=truth.sample_weights)
    payoffs = [[truth.payoffs[i][k] for k in idx]
               for i in range(truth.num_players)]
    return SampledGame(payoffs, np.full(K, 1.0 / K))


def _oos_stats(truth, profile, test_idx):
    '''Per-player OOS mean and std of the profile under the truth: exactly
    over the finite support, or on the shared test draw when test_idx is
    given (the same draw serves every solution of a replication).'''
    means, stds = [], []
    for i in range(truth.num_players):
        vals = mixed_payoff_samples(truth, i, profile)
        if test_idx is not None:
            draws = vals[test_idx]
            means.append(float(draws.mean()))
            stds.append(float(draws.std()))
        else:
            w = truth.sample_weights
            mean = float(w @ vals)
            means.append(mean)
            stds.append(float(np.sqrt(w @ (vals - mean) ** 2)))
    return means, stds


def run_oos_pd(config, sampled_eval=False, all_starts=False, out=None):
    out = sys.stdout if out is None else out
    truth = pd_truth_game()
    grid = config.gamma_grid if config.gamma_grid is not None \
        else [0.0, 0.4, 0.8]
    R, K = config.replications, config.K
    records = []
    summaries = []
    for g_idx, gamma in enumerate(grid):
        spec = RiskSpec("msd", gamma=float(gamma))
        rep_means = []
        n_uncert = 0
        for rep in range(R):
            data_rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, rep, 0]))
            game = _draw_game(truth, K, data_rng)
            s_seed = _solver_seed(config.seed, g_idx, rep, 1)
            try:
                sol = solve_game(game, spec, seed=s_seed,
                                 starts=config.starts,
                                 collect_all=all_starts)
                emitted = sol.certified_solutions if all_starts else [sol]
            except SolveFailed as exc:
                sol = exc.best
                emitted = [sol] if sol is not None else []
            if sampled_eval:
                test_rng = np.random.default_rng(
                    np.random.SeedSequence([config.seed, rep, 2]))
                test_idx = test_rng.choice(truth.num_samples,
                                           size=config.test_samples,
                                           p=truth.sample_weights)
            else:
                test_idx = None
            if not emitted:
                records.append((gamma, rep, -1, np.nan, np.nan, np.nan,
                                np.nan, False, s_seed))
                n_uncert += 1
                continue
            primary_means = None
            for s in emitted:
                means, stds = _oos_stats(truth, s.profile, test_idx)
                records.append((gamma, rep, s.start_index, means[0], stds[0],
                                means[1], stds[1], s.certified, s_seed))
                if primary_means is None:
                    primary_means = means
            if emitted[0].certified:
                rep_means.append(primary_means)
            else:
                n_uncert += 1
        rep_means = np.array(rep_means) if rep_means else np.empty((0, 2))
        row = [gamma, len(rep_means), n_uncert]
        for i in range(2):
            if len(rep_means):
                row += [float(rep_means[:, i].mean()),
                        float(rep_means[:, i].std())]
            else:
                row += [np.nan, np.nan]
        summaries.append(tuple(row))
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    header = ("gamma", "replication", "start_index", "oos_mean_p1",
              "oos_std_p1", "oos_mean_p2", "oos_std_p2", "certified",
              "solver_seed")
    sum_header = ("gamma", "n_certified", "n_uncertified", "oos_mean_p1",
                  "oos_std_p1", "oos_mean_p2", "oos_std_p2")
    out_path = config.output_path or "oos_pd.csv"
    write_csv(out_path, header, records)
    sum_path = out_path.rsplit(".", 1)[0] + "_summary.csv"
    write_csv(sum_path, sum_header, summaries)
    print("wrote %s and %s" % (out_path, sum_path), file=out)
    for row in summaries:
        print("gamma=%-5g certified=%3d uncertified=%d "
              "oos p1=%.4f+-%.4f p2=%.4f+-%.4f"
              % (row[0], row[1], row[2], row[3], row[4], row[5], row[6]),
              file=out)
    total_uncert = sum(row[2] for row in summaries)
    if total_uncert:
        print("excluded %d uncertified replications from summaries"
              % total_uncert, file=out)
    return summaries


# --- coord_sweep -------------------------------------------------------------

def _pure_profiles_certified(game, spec, tol=1e-6):
    'Max equilibrium gap over both aligned pure profiles and both players.'
    e0 = np.array([1.0, 0.0])
    e1 = np.array([0.0, 1.0])
    worst = 0.0
    for prof in ([e0, e0], [e1, e1]):
        gaps = epsilon_dre_gap(game, prof, [spec, spec])
        worst = max(worst, float(np.max(gaps)))
    return worst <= tol, worst


def run_coord_sweep(config, out=None):
    out = sys.stdout if out is None else out
    p_grid = config.p_hat_grid if config.p_hat_grid is not None \
        else [round(0.50 + 0.01 * i, 2) for i in range(21)]
    g_grid = config.gamma_grid if config.gamma_grid is not None \
        else [0.2, 0.5, 0.8]
    rows = []
    mismatches = 0
    for g_idx, gamma in enumerate(sorted(g_grid)):
        spec = RiskSpec("msd", gamma=float(gamma))
        p_bar = msd_pure_equilibrium_threshold(gamma)
        for p_idx, p_hat in enumerate(sorted(p_grid)):
            game = coordination_game(p_hat)
            exists_cf = p_hat > p_bar
            certified, worst_gap = _pure_profiles_certified(game, spec)
            match = certified == exists_cf
            mismatches += 0 if match else 1
            s_seed = _solver_seed(config.seed, g_idx, p_idx)
            try:
                sol = solve_game(game, spec, seed=s_seed,
                                 starts=config.starts)
                solver_cert = sol.certified
                x1U, x2L = sol.profile[0][0], sol.profile[1][0]
                value1 = sol.game_values[0]
            except SolveFailed:
                solver_cert, x1U, x2L, value1 = False, np.nan, np.nan, np.nan
            rows.append((gamma, p_hat, p_bar, exists_cf, certified,
                         worst_gap, match, p_hat < 1.0 - p_bar, solver_cert,
                         x1U, x2L, value1))
            if config.surface_grid:
                _write_surface(config, p_hat, gamma, config.surface_grid)
    header = ("gamma_s", "p_hat", "p_bar", "pure_exists_closed_form",
              "pure_certified", "worst_pure_gap", "match",
              "anti_exists_closed_form", "solver_certified", "solver_x1U",
              "solver_x2L", "solver_value1")
    out_path = config.output_path or "coord_sweep.csv"
    write_csv(out_path, header, rows)
    print("wrote %s (%d rows, %d mismatches)"
          % (out_path, len(rows), mismatches), file=out)
    return 1 if mismatches else 0


def _write_surface(config, p_hat, gamma, grid_size):
    'rho surface of either player on a (x1U, x2L) grid, for plotting.'
    base = (config.output_path or "coord_sweep.csv").rsplit(".", 1)[0]
    path = "%s_surface_p%s_g%s.csv" % (base, ("%g" % p_hat).replace(".", ""),
                                       ("%g" % gamma).replace(".", ""))
    grid = np.linspace(0.0, 1.0, grid_size)
    rows = [(x1, x2, msd_coordination_payoff(p_hat, gamma, x1, x2))
            for x1 in grid for x2 in grid]
    write_csv(path, ("x1U", "x2L", "rho"), rows)
    return path


# --- cvar_sweep --------------------------------------------------------------

def run_cvar_sweep(config, out=None):
    out = sys.stdout if out is None else out
    g_grid = config.gamma_grid if config.gamma_grid is not None \
        else [round(0.1 * i, 1) for i in range(1, 10)]
    a_grid = config.alpha_grid if config.alpha_grid is not None \
        else [0.2, 0.35, 0.5, 0.7, 0.9]
    game = cvar_example_game()
    rows = []
    bad = 0
    for g_idx, gamma in enumerate(sorted(g_grid)):
        for a_idx, lvl in enumerate(sorted(a_grid)):
            closed = cvar_example_solution(CvarExampleParams(gamma, lvl))
            spec = RiskSpec("cvar", gamma=float(gamma), cvar_level=float(lvl))
            s_seed = _solver_seed(config.seed, g_idx, a_idx)
            try:
                sol = solve_game(game, spec, seed=s_seed,
                                 starts=config.starts)
                cert = sol.certified
                y1 = sol.profile[1][0]
                z1 = sol.auxiliaries[0]["z"]
                rho1 = sol.game_values[0]
                value2 = sol.game_values[1]
                vals = mixed_payoff_samples(game, 0, sol.profile)
                mean1 = float(game.sample_weights @ vals)
                var1 = float(game.sample_weights @ (vals - mean1) ** 2)
            except SolveFailed:
                cert = False
                y1 = z1 = rho1 = value2 = var1 = np.nan
            deltas = (abs(y1 - closed["y1"]), abs(z1 - closed["z1"]),
                      abs(rho1 - closed["rho1"]),
                      abs(value2 - closed["value2"]))
            ok = cert and max(deltas) <= 1e-6
            bad += 0 if ok else 1
            rows.append((gamma, lvl, closed["y1"], y1, closed["z1"], z1,
                         closed["rho1"], rho1, closed["var1"], var1,
                         closed["value2"], value2, max(deltas), cert, ok))
    header = ("gamma_c", "cvar_level", "y1_closed", "y1_solver", "z1_closed",
              "z1_solver", "rho1_closed", "rho1_solver", "var1_closed",
              "var1_solver", "value2_closed", "value2_solver", "max_delta",
              "certified", "ok")
    out_path = config.output_path or "cvar_sweep.csv"
    write_csv(out_path, header, rows)
    print("wrote %s (%d rows, %d mismatches)" % (out_path, len(rows), bad),
          file=out)
    return 1 if bad else 0


# --- thin wrappers -----------------------------------------------------------

def run_validate(config, out=None):
    out = sys.stdout if out is None else out
    rows = validate_all(config.grid_size)
    width = max(len(name) for name, _, _ in rows)
    for name, passed, err in rows:
        print("%-*s  %s  max_err=%.3g"
              % (width, name, "pass" if passed else "FAIL", err), file=out)
    if config.output_path:
        write_csv(config.output_path, ("check", "passed", "max_err"), rows)
    return 0 if all(p for _, p, _ in rows) else 1


def run_bounds(config, out=None):
    out = sys.stdout if out is None else out
    K_grid = config.K_grid if config.K_grid is not None else [20, 50, 200]
    d_grid = config.delta_grid if config.delta_grid is not None \
        else [0.05, 0.1]
    rows = []
    for delta in sorted(d_grid):
        for K in sorted(K_grid):
            rows.append((K, delta,
                         hoeffding_mean_bound(K, delta, config.num_profiles),
                         mad_bound_fixed(K, delta, config.variance),
                         mad_bound_dependent(K, delta, config.variance,
                                             config.delta_K),
                         cvar_bound_fixed(K, delta, config.cvar_level),
                         cvar_bound_dependent(K, delta, config.cvar_level,
                                              config.delta_K)))
    header = ("K", "delta", "hoeffding_mean", "mad_fixed", "mad_dependent",
              "cvar_fixed", "cvar_dependent")
    print("  ".join(header), file=out)
    for row in rows:
        print("%4d  %5g  " % row[:2]
              + "  ".join("%10.5f" % v for v in row[2:]), file=out)
    if config.output_path:
        write_csv(config.output_path, header, rows)
    return 0


def run_coverage(config, out=None):
    out = sys.stdout if out is None else out
    if config.game_path:
        truth = load_game(config.game_path)
    else:
        truth = coordination_game(0.6)
    if config.profile is not None:
        profile = [np.asarray(x, dtype=float) for x in config.profile]
    else:
        profile = [np.eye(n)[0] for n in truth.action_counts]
    res = coverage_experiment(truth, profile, config.statistic, config.K,
                              config.delta, config.trials, config.seed,
                              cvar_level=config.cvar_level,
                              player=config.player)
    if config.output_path:
        rows = [(t, res.deviations[t], res.bound, bool(res.within[t]))
                for t in range(res.trials)]
        write_csv(config.output_path,
                  ("trial", "deviation", "bound", "within"), rows)
    print("statistic=%s K=%d delta=%g coverage=%.4f threshold=%.4f %s"
          % (res.statistic, res.K, res.delta, res.coverage, res.threshold,
             "pass" if res.passed else "FAIL"), file=out)
    return 0 if res.passed else 1


def run_solve(config, all_starts=False, out=None):
    out = sys.stdout if out is None else out
    if not config.game_path:
        raise ConfigError("solve requires game_path")
    if config.spec is None:
        raise ConfigError("solve requires spec")
    game = load_game(config.game_path)
    try:
        sol = solve_game(game, config.spec, seed=config.seed,
                         starts=config.starts, collect_all=all_starts)
    except SolveFailed as exc:
        best = exc.best
        print("solve failed: %s" % exc, file=out)
        if best is not None:
            print("best residual %.3g, worst gap %.3g"
                  % (best.residual_norm, float(np.max(best.dre_gaps))),
                  file=out)
        return 1
    doc = solution_to_json(sol)
    if all_starts and sol.certified_solutions:
        doc["all_certified"] = [solution_to_json(s)
                                for s in sol.certified_solutions]
    text = json.dumps(doc, indent=2)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print("wrote %s" % config.output_path, file=out)
    else:
        print(text, file=out)
    print("certified equilibrium; game values "
          + ", ".join("%.6g" % v for v in sol.game_values), file=out)
    return 0


def run_best_response(config, out=None):
    out = sys.stdout if out is None else out
    if not config.game_path:
        raise ConfigError("best_response requires game_path")
    if config.spec is None:
        raise ConfigError("best_response requires spec")
    if config.opponents is None:
        raise ConfigError("best_response requires opponents strategies")
    game = load_game(config.game_path)
    opponents = [np.asarray(x, dtype=float) for x in config.opponents]
    res = best_response(game, config.player, opponents, config.spec)
    doc = {
        "player": config.player,
        "strategy": res.strategy.tolist(),
        "value": res.value,
        "multipliers": {k: np.asarray(v).tolist()
                        for k, v in res.multipliers.items()},
        "auxiliaries": {k: np.asarray(v).tolist()
                        for k, v in res.auxiliaries.items()},
    }
    text = json.dumps(doc, indent=2)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print("wrote %s" % config.output_path, file=out)
    else:
        print(text, file=out)
    return 0


# --- entry point -------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="cumg",
        description="solvers and experiments for sampled finite games "
                    "with risk-averse players")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override config output_path")
        if name == "oos_pd":
            p.add_argument("--sampled-eval", action="store_true",
                           help="evaluate OOS payoffs on a fresh test draw "
                                "instead of exactly on the truth support")
        if name in ("oos_pd", "solve"):
            p.add_argument("--all-starts", action="store_true",
                           help="report every certified solution")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            config = parse_config(args.config, args.command)
        else:
            config = ExperimentConfig(experiment=args.command)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.output_path = args.out
        if args.command == "oos_pd":
            run_oos_pd(config, sampled_eval=args.sampled_eval,
                       all_starts=args.all_starts)
            return 0
        if args.command == "coord_sweep":
            return run_coord_sweep(config)
        if args.command == "cvar_sweep":
            return run_cvar_sweep(config)
        if args.command == "validate":
            return run_validate(config)
        if args.command == "bounds":
            return run_bounds(config)
        if args.command == "coverage":
            return run_coverage(config)
        if args.command == "solve":
            return run_solve(config, all_starts=args.all_starts)
        if args.command == "best_response":
            return run_best_response(config)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print("file not found: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("invalid value: %s" % exc, file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
