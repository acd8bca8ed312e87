"""The combined training objective: similarity loss, checked gradients,
and the three loss-weight schedules.

    python3 demos/04_objective_and_schedules.py
"""

import numpy as np

from linsep import (
    LossTerms,
    ScheduleConfig,
    combined_loss,
    contrastive_grads,
    finite_difference_grads,
    gradcheck,
    schedule_weights,
    sim_loss,
)
from linsep.embeddings import normalize

# The similarity loss is a two-way cross entropy over temperature-scaled
# cosines; tau = 0.07 makes it sharply discriminative.
for sim_pos, sim_neg, truth in [(0.5, 0.5, "positive"), (0.9, 0.1, "positive"), (0.9, 0.1, "negative")]:
    value = sim_loss(LossTerms(sim_pos, sim_neg, 0.07, truth))
    print(f"sim_pos={sim_pos} sim_neg={sim_neg} truth={truth:<8} -> loss {value:.6g}")

terms = LossTerms(0.6, 0.2, nt_loss=2.0, nt_weight=1.0, sim_weight=0.4)
print(f"combined loss (nt 2.0, weights 1.0/0.4): {combined_loss(terms):.5f}")
print()

# Closed-form gradients against central differences on one instance.
rng = np.random.default_rng(7)
query = normalize(rng.standard_normal(8))
pos = [normalize(rng.standard_normal(8)) for _ in range(4)]
neg = [normalize(rng.standard_normal(8)) for _ in range(4)]
analytic = contrastive_grads(query, pos, neg)
numeric = finite_difference_grads(query, pos, neg)
err = np.linalg.norm(analytic.query - numeric.query) / np.linalg.norm(numeric.query)
print(f"query-gradient relative error vs finite differences: {err:.2e}")
print("full randomized check:", gradcheck(trials=30, seed=1))
print()

# Weight schedules over a 10-step run. The cosine pair hands influence
# from the similarity term to the next-token term as training completes.
for kind, scale in [("constant", 0.4), ("linear", 0.4), ("cosine", 1.6)]:
    config = ScheduleConfig(kind, scale, 10)
    sim_curve = ", ".join(f"{schedule_weights(config, s)[1]:.3f}" for s in range(10))
    print(f"{kind:>8} (scale {scale}): sim weights [{sim_curve}]")
config = ScheduleConfig("cosine", 1.6, 10)
nt_curve = ", ".join(f"{schedule_weights(config, s)[0]:.3f}" for s in range(10))
print(f"  cosine nt weights:            [{nt_curve}]")
