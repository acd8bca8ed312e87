"""Linear-separability diagnostics for vision-language-model embeddings.

Computes non-parametric probe accuracies over dumped embeddings (the
vision-stage batched variant is the linear separability ceiling),
decomposes generative performance against those ceilings with confidence
intervals and signed chi-squared dependence, and implements the combined
contrastive/next-token objective mathematics with checked gradients.
"""

from .analysis import decompose
from .embeddings import EmbeddingRecord, EmbeddingStore, PooledVector, centroid, cosine, pool
from .io import LoadedDataset, load_dataset, read_tensor_file, write_dataset, write_tensor_file
from .objective import (
    GradientBundle,
    LossTerms,
    ScheduleConfig,
    combined_loss,
    contrastive_forward,
    contrastive_grads,
    finite_difference_grads,
    gradcheck,
    schedule_weights,
    sim_loss,
)
from .probe import (
    BongardSample,
    ProbeResult,
    classify_all,
    classify_batched,
    classify_single,
    probe_accuracy,
    score_predictions,
)
from .stats import (
    AccuracyEstimate,
    DependenceResult,
    EvalReport,
    PredictionSet,
    ReportRow,
    TaxonomyLabel,
    aggregate_report,
    chi2_dependence,
    chi2_sf,
    classify_taxonomy,
    compare,
    dependence_from_table,
    margin_of_error,
)
from .synth import SynthConfig, SynthDataset, generate, oracle_nearest_centroid, oracle_predictions

__version__ = "0.1.0"

__all__ = [
    "AccuracyEstimate",
    "BongardSample",
    "DependenceResult",
    "EmbeddingRecord",
    "EmbeddingStore",
    "EvalReport",
    "GradientBundle",
    "LoadedDataset",
    "LossTerms",
    "PooledVector",
    "PredictionSet",
    "ProbeResult",
    "ReportRow",
    "ScheduleConfig",
    "SynthConfig",
    "SynthDataset",
    "TaxonomyLabel",
    "aggregate_report",
    "centroid",
    "chi2_dependence",
    "chi2_sf",
    "classify_all",
    "classify_batched",
    "classify_single",
    "classify_taxonomy",
    "combined_loss",
    "compare",
    "contrastive_forward",
    "contrastive_grads",
    "cosine",
    "decompose",
    "dependence_from_table",
    "finite_difference_grads",
    "generate",
    "gradcheck",
    "load_dataset",
    "margin_of_error",
    "oracle_nearest_centroid",
    "oracle_predictions",
    "pool",
    "probe_accuracy",
    "read_tensor_file",
    "schedule_weights",
    "score_predictions",
    "sim_loss",
    "write_dataset",
    "write_tensor_file",
]
