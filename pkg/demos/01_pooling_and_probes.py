"""Pooling, centroids, and the two probe contexts on hand-built vectors.

Run from the repo root after `pip install -e .`:

    python3 demos/01_pooling_and_probes.py
"""

import math

import numpy as np

from linsep import (
    BongardSample,
    EmbeddingRecord,
    EmbeddingStore,
    classify_batched,
    classify_single,
    cosine,
    pool,
)

# A token matrix is one image's embedding sequence. Pooling collapses it
# to a unit vector: mean over tokens, then L2 normalization.
record = EmbeddingRecord("demo", "vision", np.array([[3.0, 4.0], [1.0, 0.0]]))
pooled = pool(record, "mean")
print("mean-pooled unit vector:", pooled.v, "norm:", np.linalg.norm(pooled.v))
print("max-pooled unit vector: ", pool(record, "max").v)
print("cosine to x-axis:", cosine(pooled, [1.0, 0.0]))
print()

# Build a toy task: positives cluster near the x-axis, negatives near the
# y-axis, the query leans positive.
store = EmbeddingStore()
angles = {"p0": 2, "p1": -4, "p2": 7, "n0": 86, "n1": 95, "n2": 91, "q": 12}
for image_id, deg in angles.items():
    rad = math.radians(deg)
    store.add(EmbeddingRecord(image_id, "vision", [[math.cos(rad), math.sin(rad)]]))

sample = BongardSample("toy", ("p0", "p1", "p2"), ("n0", "n1", "n2"), "q", "positive")
result = classify_batched(store, sample)
print(f"batched: predicted={result.predicted} sim_pos={result.sim_pos:.4f} sim_neg={result.sim_neg:.4f}")

# Outlier sensitivity: one positive hugs the query, the other positives sit
# on the far side of the circle, and the negatives sit moderately close.
# The nearest neighbor chases the outlier; the centroid does not.
store2 = EmbeddingStore()
layout = {"q": 0, "p0": 5}
layout.update({f"p{j}": 175 + j for j in range(1, 6)})
layout.update({f"n{j}": 58 + j for j in range(6)})
for image_id, deg in layout.items():
    rad = math.radians(deg)
    store2.add(EmbeddingRecord(image_id, "vision", [[math.cos(rad), math.sin(rad)]]))

sample2 = BongardSample(
    "outlier", tuple(f"p{j}" for j in range(6)), tuple(f"n{j}" for j in range(6)), "q", "positive"
)
single = classify_single(store2, sample2)
batched = classify_batched(store2, sample2)
print(f"single context:  predicted={single.predicted} (best sims {single.sim_pos:.3f}/{single.sim_neg:.3f})")
print(f"batched context: predicted={batched.predicted} (centroid sims {batched.sim_pos:.3f}/{batched.sim_neg:.3f})")
print("-> prototypes absorb the outlier; the single nearest example does not.")
