"""Faithfulness auditing for compressed binary classifiers.

Train a small dense baseline, compress it by magnitude pruning or simulated
8-bit quantization, then ask whether the compressed model still behaves like
the original: per-instance agreement metrics, chi-squared tests over the
predicted-class distribution, equalized-odds bias per demographic subgroup,
and validation-vs-test predictability of the verdicts.
"""

from .datatab import (
    Dataset,
    Schema,
    SplitSpec,
    Standardizer,
    SubgroupSpec,
    apply_standardizer,
    derive_subgroups,
    fit_standardizer,
    load_csv,
    stratified_split,
)
from .metrics import (
    ClassificationMetrics,
    ConfusionCounts,
    PredictabilityStats,
    RunAggregate,
    aggregate,
    classification_metrics,
    confusion,
    mape,
    predictability_stats,
    rmse,
)
from .stat_test import (
    ChiSquareResult,
    ContingencyTable,
    DegenerateTableError,
    chi_square,
    class_distribution_table,
    reg_upper_gamma,
)
from .fairness import (
    BiasReport,
    GroupRates,
    SubgroupAgreementResult,
    UndefinedRateError,
    bias_report,
    equalized_odds_bias,
    group_rates,
    subgroup_agreement,
)
from .nnet import (
    MlpModel,
    TrainConfig,
    forward,
    init_model,
    load_model,
    predict_labels,
    predict_proba,
    save_model,
    train,
)
from .compress import (
    PruneSchedule,
    QuantizedModel,
    QuantSpec,
    SizeReport,
    forward_quantized,
    load_quantized,
    predict_quantized_labels,
    prune,
    quantize,
    save_pruned,
    save_quantized,
    size_report,
    sparsity_at,
)
from .audit import (
    ExperimentConfig,
    FaithfulnessVerdict,
    PredictabilityOutcome,
    PredictionSet,
    audit_predictions,
    load_experiment_config,
    predictability_score,
    read_prediction_set,
    run_experiment,
    verdict_from_p,
    write_prediction_set,
)
from .report import render_markdown, write_report_files

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Schema",
    "SplitSpec",
    "Standardizer",
    "SubgroupSpec",
    "apply_standardizer",
    "derive_subgroups",
    "fit_standardizer",
    "load_csv",
    "stratified_split",
    "ClassificationMetrics",
    "ConfusionCounts",
    "PredictabilityStats",
    "RunAggregate",
    "aggregate",
    "classification_metrics",
    "confusion",
    "mape",
    "predictability_stats",
    "rmse",
    "ChiSquareResult",
    "ContingencyTable",
    "DegenerateTableError",
    "chi_square",
    "class_distribution_table",
    "reg_upper_gamma",
    "BiasReport",
    "GroupRates",
    "SubgroupAgreementResult",
    "UndefinedRateError",
    "bias_report",
    "equalized_odds_bias",
    "group_rates",
    "subgroup_agreement",
    "MlpModel",
    "TrainConfig",
    "forward",
    "init_model",
    "load_model",
    "predict_labels",
    "predict_proba",
    "save_model",
    "train",
    "PruneSchedule",
    "QuantizedModel",
    "QuantSpec",
    "SizeReport",
    "forward_quantized",
    "load_quantized",
    "predict_quantized_labels",
    "prune",
    "quantize",
    "save_pruned",
    "save_quantized",
    "size_report",
    "sparsity_at",
    "ExperimentConfig",
    "FaithfulnessVerdict",
    "PredictabilityOutcome",
    "PredictionSet",
    "audit_predictions",
    "load_experiment_config",
    "predictability_score",
    "read_prediction_set",
    "run_experiment",
    "verdict_from_p",
    "write_prediction_set",
    "render_markdown",
    "write_report_files",
    "__version__",
]
