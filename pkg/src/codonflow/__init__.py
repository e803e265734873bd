"""codonflow: multi-objective mRNA codon design with flow-based samplers.

Design synonymous codon sequences for a target protein by training a
sequential sampler whose terminal distribution is proportional to a
preference-weighted reward over GC content, secondary-structure pairing,
and codon-usage adaptation — with exact small-space enumeration available
to verify the sampler end to end.
"""

from .curriculum import (
    CurriculumConfig,
    CurriculumResult,
    Teacher,
    curriculum_train,
    default_tasks,
    named_config,
)
from .environment import CodonDesignEnvironment, State
from .exceptions import (
    CodonflowError,
    ConfigurationError,
    EnumerationCapError,
    IllegalActionError,
    InputError,
    InsufficientSamplesError,
    InvalidDesignError,
    InvariantViolationError,
    MetricUndefinedError,
    NumericFailureError,
    TrainingAbortError,
)
from .genetic_code import (
    AMINO_ACIDS,
    Codon,
    MrnaSequence,
    Protein,
    design_space_log10,
    design_space_size,
    translate,
)
from .metrics import (
    ParetoFront,
    SampleSet,
    ScoredDesign,
    metrics_report,
    pareto_front,
    pareto_performance,
    topk_diversity,
    topk_reward,
    uniqueness,
)
from .objectives import (
    CodonUsageTable,
    ObjectiveScorer,
    ObjectiveVector,
    ObjectivesConfig,
    codon_adaptation_index,
    gc_content,
    mfe_pair_count,
)
from .oracle import DesignSpace, empirical_counts, enumerate_design_space, tv_distance
from .policy import AdamOptimizer, MlpPolicy, TabularPolicy, load_checkpoint, save_checkpoint
from .proteins import ProteinPool, ProteinRecord, bundled_demo_pool, load_proteins, random_pool
from .training import (
    TrainingConfig,
    TrainResult,
    evaluate_mean_reward,
    rollout_batch,
    subtb_loss_batch,
    tb_loss_batch,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AMINO_ACIDS",
    "AdamOptimizer",
    "Codon",
    "CodonDesignEnvironment",
    "CodonUsageTable",
    "CodonflowError",
    "ConfigurationError",
    "CurriculumConfig",
    "CurriculumResult",
    "DesignSpace",
    "EnumerationCapError",
    "IllegalActionError",
    "InputError",
    "InsufficientSamplesError",
    "InvalidDesignError",
    "InvariantViolationError",
    "MetricUndefinedError",
    "MlpPolicy",
    "MrnaSequence",
    "NumericFailureError",
    "ObjectiveScorer",
    "ObjectiveVector",
    "ObjectivesConfig",
    "ParetoFront",
    "Protein",
    "ProteinPool",
    "ProteinRecord",
    "SampleSet",
    "ScoredDesign",
    "State",
    "TabularPolicy",
    "Teacher",
    "TrainResult",
    "TrainingAbortError",
    "TrainingConfig",
    "bundled_demo_pool",
    "codon_adaptation_index",
    "curriculum_train",
    "default_tasks",
    "design_space_log10",
    "design_space_size",
    "empirical_counts",
    "enumerate_design_space",
    "evaluate_mean_reward",
    "gc_content",
    "load_checkpoint",
    "load_proteins",
    "metrics_report",
    "mfe_pair_count",
    "named_config",
    "pareto_front",
    "pareto_performance",
    "random_pool",
    "rollout_batch",
    "save_checkpoint",
    "subtb_loss_batch",
    "tb_loss_batch",
    "topk_diversity",
    "topk_reward",
    "train",
    "translate",
    "tv_distance",
    "uniqueness",
]
