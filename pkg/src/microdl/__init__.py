"""Micro-supervised disturbance learning: RBM/GRBM feature learning guided by
two labels per class, with spectral clustering and evaluation tooling."""

from .clustering import SpectralClustering, gaussian_affinity, kmeans, spectral_cluster
from .disturbance import (
    DisturbancePairs, MicroRBM, TrainingConfig, build_dfd, micro_update,
    select_representatives, spi_grad_b, spi_grad_c, spi_grad_w, spi_kl_term,
    train_micro_dgrbm, train_micro_drbm,
)
from .exceptions import (
    ConfigError, DataError, DimensionError, KindError, MicroDLError, NumericError,
    ParameterError,
)
from .metrics import (
    PairCounts, clustering_accuracy, fm_index, jaccard_index, pair_counts, rand_index,
)
from .rbm import RBM, Cd1Stats, RbmParams, cd1_step, cd1_update, hidden_given_visible
from .stack import MicroDL, StackSpec, TrainedStack, encode, train_stack
from .stats import RankTable, friedman_aligned_ranks, nemenyi_posthoc

__version__ = "0.1.0"
