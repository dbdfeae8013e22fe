"""Incremental learning engine for probabilistic movement primitives."""

from .basis import BasisConfig, basis_row, basis_rows, block_basis
from .errors import (ConfigError, DegenerateReference, DegenerateTrajectory,
                     FileFormatError, InsufficientDemos, InvalidCount,
                     InvalidPrior, InvalidSplit, NonMonotoneTime,
                     PrompLearnError, SingularCovariance)
from .estimators import (BatchFitReport, NIWPrior, fit_em_map, fit_em_mle,
                         fit_ridge)
from .incremental import (MetricHookPayload, StepwiseConfig, StepwiseState,
                          add_demonstration, add_minibatch, init_session,
                          run_passes, step_size)
from .metrics import (MetricReport, bhattacharyya_gaussian,
                      bhattacharyya_trajectory, compare_to_reference,
                      frobenius_rel_error, log10_condition_number,
                      pc_rotation_deg)
from .model import (Demonstration, ProMPParams, WeightPosterior,
                    marginal_at_phase, marginal_log_likelihood,
                    normalize_phase, sample_trajectory, weight_posterior)
from .synthlab import (ReferenceSpec, ShiftDatasetSpec, build_reference_promp,
                       experiment_adaptation, experiment_compare,
                       experiment_progress, generate_seed_trajectories,
                       make_reference, make_shifted_dataset,
                       make_step_shift_dataset, preset_adapt, preset_compare,
                       preset_progress, sample_dataset)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
