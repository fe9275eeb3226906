"""Bayesian compressive sensing DOA estimation for coupled uniform linear arrays.

A numpy/scipy library with three sequential estimators for dynamic
direction-of-arrival tracking on a ULA with mutual coupling:

* a Kalman tracker whose per-snapshot hyperparameters come from a relevance
  vector machine fit on the innovation (zero prior mean: the traditional
  baseline; predicted-signal prior mean: the modified estimator), and
* a spike-and-slab Gibbs sampler whose indicator prior suppresses estimates far
  from the previous snapshot's support,

plus a Monte-Carlo benchmark harness with stock scenarios and a CLI.
"""

from .array_model import (ArrayGeometry, ConfigurationError, CouplingSpec,
                          RealifiedSystem, Snapshot, SteeringGrid, coupling_matrix,
                          load_array_config, make_grid, realify, realify_matrix,
                          stack_complex, steering_vector, synthesize_snapshot,
                          unstack_complex)
from .bcskf import (MotionModel, TrackState, UpdateResult, initialize_track,
                    kalman_update, predict, shift_prediction, track_step)
from .gibbs import (ChainSummary, GibbsConfig, GibbsState, conditional_signal_params,
                    run_chain, sample_indicators, sample_noise_precision,
                    sample_precision, sample_signal)
from .harness import (ResultRow, ScenarioResult, emit_results, match_errors, rmse,
                      run_estimator_sequence, run_scenario, run_single_trial,
                      synthesize_trial)
from .rvm import (NumericalError, RvmConfig, RvmResult, RvmState, log_marginal,
                  log_marginal_via_posterior, posterior_stats, run_modified_rvm,
                  update_noise, update_precisions)
from .scenarios import (ScenarioSpec, builtin_scenarios, scenario_by_name,
                        true_trajectory)
from .thresholding import (DoaEstimate, ThresholdConfig, primary_doa, threshold,
                           thresholded_vector)

__version__ = "0.1.0"
