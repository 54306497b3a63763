"""Static grouping-strategy design for group-connected BD-RIS.

Offline, a swap-neighborhood local search picks the partition of RIS
elements into groups from a training set of channel realizations; online,
the block-diagonal scattering matrix is optimized per realization.
"""
from .channel import (ChannelRealization, ChannelSampler, CorrelationSpec, TrainingSet,
                      exponential_corr, load_training_set, path_loss, ris_covariance,
                      sample_realizations, save_training_set)
from .errors import (BDRISError, DegenerateInputError, InvalidConfigError,
                     InvariantViolationError, NumericalError, OptimizationFailure, RankError)
from .experiment import (ExperimentConfig, ExperimentResult, export_grouping_map,
                         format_config, intra_group_distance, load_config, run_experiment)
from .grouping import (SearchTrace, SurrogatePrecompute, dominant_singular_triplet,
                       grouping_objective, mu_grouping_objective, mu_precompute, optimize_grouping,
                       su_grouping_objective, su_precompute, swap_neighborhood)
from .link import (PrecoderSet, effective_channel, mrt_precoder, received_power, sum_rate,
                   zf_precoders)
from .model import (GroupingStrategy, ReactanceBlocks, ScatteringBlocks, SystemConfig,
                    assemble_scattering, cayley_scattering, count_groupings,
                    permutation_matrix, reactance_from_scattering, sequential_grouping)
from .scattering import (QuasiNewtonOptions, closed_form_blocks, optimize_scattering_mu,
                         optimize_scattering_su, symmetric_unitary_map)

__version__ = "0.1.0"
