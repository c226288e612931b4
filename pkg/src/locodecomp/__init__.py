"""Feature importance decomposition for linear regression tables.

For every feature the package splits leave-one-covariate-out (LOCO)
importance into unique, redundant and synergistic parts by searching over
context subsets, resolves the same scores per pattern, and computes Shapley
effects for comparison. See the README for the file formats the command-line
interface emits.
"""

from ._version import __version__
from .config import RunConfig, load_run_config
from .dataset import (
    ColumnStats,
    Dataset,
    RawTable,
    StandardizationReport,
    load_csv,
    standardize,
)
from .decompose import (
    FeatureDecomposition,
    GreedyPath,
    GreedyStep,
    SurrogateConfig,
    decompose_all,
    decompose_feature,
    greedy_search,
    surrogate_test,
)
from .errors import ConfigError, DataError, NumericError
from .local_scores import (
    LocalScoreMatrix,
    ThresholdAnalysis,
    ThresholdPoint,
    local_loco,
    local_loco_values,
    local_score_matrices,
    local_score_vectors,
    local_scores,
    tertile_classes,
    u_threshold_analysis,
)
from .oracle import ExhaustiveResult, exhaustive_minmax, subset_loco_values
from .regress import (
    EvalScheme,
    FittedModel,
    LocoEvaluator,
    ModelCache,
    fit,
    loco,
    mse,
    pairwise_power,
)
from .report import analyze, run_global, run_local, run_threshold
from .shapley import (
    ShapleyEstimate,
    exact_local_shapley_matrix,
    exact_shapley,
    exact_shapley_all,
    local_shapley,
    mc_local_shapley_matrix,
    mc_shapley,
    mc_shapley_all,
    subset_weights,
)
from .synth import (
    FAMILIES,
    PopulationScores,
    SyntheticSpec,
    generate,
    population_decomposition,
    population_error,
    population_loco,
)

__all__ = [
    "__version__",
    "ColumnStats",
    "ConfigError",
    "DataError",
    "Dataset",
    "EvalScheme",
    "ExhaustiveResult",
    "FAMILIES",
    "FeatureDecomposition",
    "FittedModel",
    "GreedyPath",
    "GreedyStep",
    "LocalScoreMatrix",
    "LocoEvaluator",
    "ModelCache",
    "NumericError",
    "PopulationScores",
    "RawTable",
    "RunConfig",
    "ShapleyEstimate",
    "StandardizationReport",
    "SurrogateConfig",
    "SyntheticSpec",
    "ThresholdAnalysis",
    "ThresholdPoint",
    "analyze",
    "decompose_all",
    "decompose_feature",
    "exact_local_shapley_matrix",
    "exact_shapley",
    "exact_shapley_all",
    "exhaustive_minmax",
    "fit",
    "generate",
    "greedy_search",
    "load_csv",
    "load_run_config",
    "local_loco",
    "local_loco_values",
    "local_score_matrices",
    "local_score_vectors",
    "local_scores",
    "local_shapley",
    "loco",
    "mc_local_shapley_matrix",
    "mc_shapley",
    "mc_shapley_all",
    "mse",
    "pairwise_power",
    "population_decomposition",
    "population_error",
    "population_loco",
    "run_global",
    "run_local",
    "run_threshold",
    "standardize",
    "subset_loco_values",
    "subset_weights",
    "surrogate_test",
    "tertile_classes",
    "u_threshold_analysis",
]
