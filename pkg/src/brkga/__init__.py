"""Biased random-key genetic algorithms.

Chromosomes are vectors of keys in ``[0, 1)``; a problem-specific decoder
maps them to solutions. See :class:`brkga.BRKGA` and :class:`brkga.MpBRKGA`
for the estimator-style entry points.
"""

from .control import (
    QLearningController,
    QTable,
    ScheduleBounds,
    abrkga_tick,
    apply_population_resize,
    q_select_action,
    q_update,
    self_adaptive_rho,
)
from .core import (
    BiasKind,
    BrkgaConfig,
    DecodeError,
    Individual,
    InvalidArgumentError,
    NotApplicableError,
    ParentPool,
    Population,
    RngStream,
    Sense,
    StallCounter,
    check_keys,
    init_population,
    new_random_chromosome,
    partition,
)
from .decoders import (
    Decoder,
    FunctionDecoder,
    KnapsackDecoder,
    KnapsackInstance,
    SmttDecoder,
    SmttInstance,
    TspDecoder,
    TspInstance,
    encode_permutation,
    encode_subset,
    knapsack_decode,
    smtt_decode,
    tsp_decode,
)
from .diversity import elite_diversity_filter, migrate, population_diversity, reset_population, shake
from .evolve import (
    biased_uniform_crossover,
    evolve_generation,
    multi_parent_crossover,
    rank_bias_weight,
    select_parents,
)
from .ipr import IprVariant, hamming_theta_distance, ipr, kendall_tau_distance, pick_ipr_pair
from .mo import (
    MpBrkgaConfig,
    ParetoArchive,
    archive_insert,
    crowding_distance,
    dominates,
    hypervolume_2d,
    non_dominated_sort,
    weighted_aggregate,
)
from .solver import BRKGA, MpBRKGA, RunTrace, TraceRecord

__version__ = "0.1.0"
