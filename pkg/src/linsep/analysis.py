"""Performance decomposition: probe ceilings, taxonomy, and dependence
per generative method.

The linear separability ceiling is fixed as the batched-context,
mean-pooled, vision-stage probe accuracy; the final-stage counterpart
uses the same context and pooling.
"""

from __future__ import annotations

from typing import Sequence

from .embeddings import EmbeddingStore
from .probe import BongardSample, classify_all, prediction_set, score_predictions
from .stats import (
    EvalReport,
    PredictionSet,
    ReportRow,
    aggregate_report,
    chi2_dependence,
    classify_taxonomy,
    compare,
)


def decompose(
    store: EmbeddingStore,
    samples: Sequence[BongardSample],
    gen_sets: Sequence[PredictionSet],
    dataset_name: str,
) -> EvalReport:
    """Full decomposition of one dataset against its generative methods.

    Per method: accuracy (invalid predictions excluded and tallied), CI
    comparisons against the ceiling and the final-stage probe, the
    taxonomy label, and signed dependence with both probe stages. The
    taxonomy is omitted (None) when invalid predictions shrank the
    generative sample count, since the label is only defined for
    estimates over the same samples.
    """
    lsc_results = classify_all(store, samples, "vision", "batched", "mean")
    final_results = classify_all(store, samples, "final", "batched", "mean")
    lsc_est, _ = score_predictions(samples, {r.sample_id: r.predicted for r in lsc_results}, "lsc")
    final_est, _ = score_predictions(
        samples, {r.sample_id: r.predicted for r in final_results}, "final"
    )
    vision_preds = prediction_set(lsc_results, "probe_vision")
    final_preds = prediction_set(final_results, "probe_final")

    rows = []
    for gen_set in gen_sets:
        gen_est, invalid = score_predictions(samples, gen_set.predictions, gen_set.label)
        comparisons = {
            "gen_vs_lsc": compare(gen_est, lsc_est),
            "gen_vs_final": compare(gen_est, final_est),
        }
        taxonomy = (
            classify_taxonomy(gen_est, lsc_est, final_est) if gen_est.n == lsc_est.n else None
        )
        dependences = {
            "vision": chi2_dependence(vision_preds, gen_set),
            "final": chi2_dependence(final_preds, gen_set),
        }
        rows.append(
            ReportRow(
                label=gen_set.label,
                estimates={"gen": gen_est, "lsc": lsc_est, "final": final_est},
                comparisons=comparisons,
                taxonomy=taxonomy,
                dependences=dependences,
                invalid_count=invalid,
            )
        )
    return aggregate_report(dataset_name, rows)
