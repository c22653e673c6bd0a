"""Saddle-point optimization toolkit: accelerated primal-dual iterations over
Bregman geometries, growth-condition certification, and a benchmark CLI."""

from .errors import (ConfigError, DivergenceError, GrowthError, NumericalError,
                     ProxError, ScheduleError, SellaError, SolveError)
from .geometry import (BregmanGenerator, SimpleSet, check_nonexpansive,
                       distance, project, project_polyhedron, prox_step)
from .problems import (SaddleProblem, SmoothnessConstants, SolutionSet,
                       StructuredProblem, example1_fixture, example2_as_saddle,
                       example2_fixture, field_operator, kkt_solution_set,
                       load_problem, make_fenchel, make_random_quadratic,
                       problem_from_dict, problem_to_dict, save_problem)
from .growth import (CertReport, GrowthModuli, HoffmanResult, XiConstants,
                     certify_qfg, certify_qgg, compute_growth_moduli,
                     hoffman_constant, qgg_implies_qfg_check, solution_system,
                     structured_moduli, varsigma_for, xi_constants)
from .solver import (ConvergenceTrace, GapdParams, GdaSteps, IterateState,
                     StopRule, StepsizeReport, contraction_factor,
                     auxiliary_rate_bound, default_gda_step, derive_params,
                     gapd_step, gda_step, lyapunov_check, residual, run,
                     stepsize_condition_check)
from .bench import (CSV_HEADER, ExperimentConfig, MethodSpec, ResultRow,
                    emit_csv, emit_summary_json, parse_config, parse_csv,
                    run_experiment)

__version__ = "0.1.0"
