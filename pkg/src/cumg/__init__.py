'''Solvers for finite games whose payoffs are known only through a sample
of payoff tensors and whose players rank strategies by coherent reward
measures (mean-semideviation, mean-deviation, or a CVaR mix).

Layers: game containers and payoff algebra (game_model), the measures and
their worst-case-distribution envelopes (risk_measures), best responses by
linear programming or supergradient ascent (best_response), equilibria via
semismooth Newton on complementarity systems (complementarity), analytic
oracles for three worked games (closed_forms), concentration bounds and
coverage experiments (bounds), and a CLI (cli).
'''

from .game_model import (SampledGame, action_payoff_matrix,
                         expected_mixed_payoff, game_from_json, game_to_json,
                         load_game, mixed_payoff_samples, normalize_payoffs,
                         pure_payoff, save_game)
from .risk_measures import (EnvelopeCertificate, RiskSpec, cvar,
                            lower_tail_take, rho_profile, rho_scalar,
                            spec_from_json, spec_to_json, verify_envelope,
                            worst_case_distribution)
from .best_response import (BestResponseResult, LinearProgram, LPSolution,
                            best_response, build_cvar_lp, build_md_lp,
                            build_msd_lp, epsilon_dre_gap, solve_lp,
                            supergradient_ascent)
from .complementarity import (ComplementaritySystem, EquilibriumSolution,
                              SolveFailed, build_cvar_system,
                              build_empirical_system, build_md_system,
                              build_msd_system, distinct_profiles,
                              solution_to_json, solve, solve_game,
                              support_enumeration_nash, verify_solution)
from .closed_forms import (CoordinationParams, CvarExampleParams,
                           ce_counterexample_check, coordination_game,
                           cvar_example_game, cvar_example_solution,
                           drg_interval_payoff, infinite_support_ce_check,
                           msd_coordination_payoff,
                           msd_pure_equilibrium_threshold, validate_all)
from .bounds import (BoundInputs, CoverageResult, approx_loss_B,
                     coverage_experiment, cvar_bound_dependent,
                     cvar_bound_fixed, excess_suboptimality_bound,
                     hoeffding_mean_bound, mad_bound_dependent,
                     mad_bound_fixed, population_statistics)

__version__ = "0.1.0"
