"""Desk-scale laboratory for comparing inner solvers in Bayesian optimization.

The package provides a noiseless Matern-5/2 GP surrogate, the lower
confidence bound acquisition with fixed and scheduled exploration weights,
three inner solvers (informed local search, informed multi-start, and a
deterministic interval branch-and-bound), multimodal benchmark objectives
with certified optima, a composite termination rule, and the matched-design
statistics used to compare solver success probabilities and iteration
counts.
"""

from .acquisition import (AcquisitionContext, DimensionLogSchedule,
                          DiscretizedConfidenceSchedule, FixedKappa,
                          kappa_at, lcb_batch, lcb_value_grad)
from .benchmarks import (BENCHMARK_NAMES, ackley3, camelback, get_benchmark,
                         hartmann4, latin_hypercube, mueller_brown,
                         reference_optimum)
from .box import SearchBox
from .engine import (BenchmarkHandle, BnbOptions, RunRecord,
                     TerminationConfig, check_termination, classify_success,
                     run_bo)
from .gkls import GklsInstance, gkls_generate
from .global_solver import (BnbResult, Interval, LoosenState, bnb_minimize,
                            interval_kernel_over_box, interval_posterior,
                            lcb_lower_bound, loosen_policy_update)
from .gp import (GpModel, KernelHyper, Posterior, ScaledDataset, fit,
                 kernel_matern52, log_marginal_likelihood, posterior,
                 posterior_batch, predict_raw)
from .harness import (CaseStudyConfig, RunStore, analyze, derive_rng,
                      gen_designs, load_config, read_designs, regret_csv,
                      run_case_study, write_designs)
from .local_solvers import (ils_minimize, ims_minimize, informed_initial_point,
                            softmax_weights, standardized_scores)
from .qn import LocalSolveResult, bounded_qn_minimize
from .sobol import sobol_points
from .stats import (CmleFit, SuccessTable, build_success_table, cmle_fit,
                    cmle_joint_lr, iteration_stats, minimax_q1, minimax_q2,
                    paired_t_one_sided, regret_curves, student_t_sf,
                    success_probability_vs_cap)

__version__ = "0.1.0"
