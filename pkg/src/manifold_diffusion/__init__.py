"""Speciation and collapse times of empirical-score diffusion models on
manifold Gaussian-mixture data: theory evaluators plus desk-scale
stochastic experiments."""

from .activations import Activation, make_activation
from .collapse import (CollapseResult, FreeEnergyResult, collapse_time_glm,
                       collapse_time_linear_isometry, collapse_time_linear_rmt,
                       f_rs, f_star, logdet_isometry, mp_h, mp_logdet, psi,
                       psi_big, psi_big_linear, psi_quadrature_check)
from .diffusion import (DiffusionSchedule, EmpiricalScore, TrajectoryRecord,
                        backward_integrate, empirical_score, forward_sample,
                        schedule)
from .model import (Dataset, EmbeddingMatrix, ManifoldModel, build_embedding,
                    load_model_config, make_model, model_from_config,
                    model_to_config, sample_count, sample_dataset,
                    save_model_config)
from .speciation import (GammaFunctions, GepConstants, gamma0_sq_sum,
                         gamma_eval, gep_constants, lambdas, potential,
                         potential_curvature_at_zero, reduced_sde_simulate,
                         score_tail_term, speciation_time_asymptotic,
                         speciation_time_finite)
from .experiments import (ExperimentRecord, PartitionSplit,
                          collapse_crossing_experiment, free_energy_mc,
                          model_hash, partition_split, rem_derivative_check,
                          sign_change_time, speciation_experiment,
                          threshold_crossing, tilted_log_partition)

__version__ = "0.1.0"
