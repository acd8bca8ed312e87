import math

import numpy as np
import pytest

from linsep.errors import InvalidConfig
from linsep.probe import BongardSample, classify_all, probe_accuracy
from linsep.stats import PredictionSet, chi2_dependence
from linsep.synth import (
    SIGMA,
    SynthConfig,
    SynthDataset,
    generate,
    oracle_nearest_centroid,
    oracle_predictions,
)
from linsep.embeddings import EmbeddingRecord, EmbeddingStore


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=1, num_samples=10)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=0)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, k=0)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, separation=-1.0)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, separation=2.0 / SIGMA + 1)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, gen_agreement=1.5)
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, final_transform="noise")
        with pytest.raises(InvalidConfig):
            SynthConfig(seed=1, dim=4, num_samples=10, tokens_per_image=0)


class TestGeneration:
    def test_bit_identical_regeneration(self):
        config = SynthConfig(seed=17, dim=8, num_samples=30, separation=1.5)
        a, b = generate(config), generate(config)
        for stage in ("vision", "final"):
            for image_id in a.store.image_ids(stage):
                assert np.array_equal(
                    a.store.get(image_id, stage).tokens, b.store.get(image_id, stage).tokens
                )
        assert a.samples == b.samples
        assert a.gen_predictions == b.gen_predictions

    def test_balanced_truth_labels(self):
        for n in (9, 10):
            dataset = generate(SynthConfig(seed=2, dim=4, num_samples=n))
            pos = sum(1 for s in dataset.samples if s.truth == "positive")
            assert abs(pos - (n - pos)) <= 1

    def test_shapes_and_stages(self):
        config = SynthConfig(seed=3, dim=5, num_samples=4, k=2, tokens_per_image=3)
        dataset = generate(config)
        assert dataset.store.stages() == ("final", "vision")
        assert len(dataset.store) == 2 * 4 * (2 * 2 + 1)
        rec = dataset.store.get(dataset.samples[0].query, "vision")
        assert rec.tokens.shape == (3, 5)

    def test_tokens_are_float32_valued(self):
        dataset = generate(SynthConfig(seed=4, dim=4, num_samples=3))
        tokens = dataset.store.get(dataset.samples[0].query, "vision").tokens
        assert np.array_equal(tokens, tokens.astype(np.float32).astype(np.float64))

    def test_no_signal_is_chance_level(self):
        dataset = generate(SynthConfig(seed=5, dim=8, num_samples=400, separation=0.0))
        acc = oracle_nearest_centroid(dataset)
        # 0.5 +- 3 binomial sigmas at n=400
        assert abs(acc - 0.5) < 3 * math.sqrt(0.25 / 400)

    def test_strong_signal_is_near_perfect(self):
        dataset = generate(SynthConfig(seed=6, dim=16, num_samples=500, separation=8.0))
        assert oracle_nearest_centroid(dataset) > 0.99
        assert dataset.bayes_accuracy > 0.999

    def test_monotone_in_separation(self):
        separations = [0.0, 1.0, 2.0, 4.0, 8.0]
        for seed in (1, 2, 3):
            accs = [
                oracle_nearest_centroid(
                    generate(SynthConfig(seed=seed, dim=8, num_samples=400, separation=sep))
                )
                for sep in separations
            ]
            for lo, hi in zip(accs, accs[1:]):
                assert hi >= lo - 0.005

    def test_identity_final_equals_vision(self):
        dataset = generate(
            SynthConfig(seed=7, dim=6, num_samples=20, final_transform="identity")
        )
        for image_id in dataset.store.image_ids("vision"):
            assert np.array_equal(
                dataset.store.get(image_id, "vision").tokens,
                dataset.store.get(image_id, "final").tokens,
            )

    def test_rotation_preserves_probe_accuracy(self):
        dataset = generate(
            SynthConfig(seed=8, dim=8, num_samples=150, separation=2.0, final_transform="rotation")
        )
        vision = probe_accuracy(dataset.store, dataset.samples, "vision")
        final = probe_accuracy(dataset.store, dataset.samples, "final")
        # float32 re-rounding after the rotation can flip borderline calls
        assert abs(vision.p_hat - final.p_hat) <= 0.02

    def test_collapse_destroys_final_separability(self):
        dataset = generate(
            SynthConfig(seed=9, dim=8, num_samples=300, separation=3.0, final_transform="collapse")
        )
        vision = probe_accuracy(dataset.store, dataset.samples, "vision")
        final = probe_accuracy(dataset.store, dataset.samples, "final")
        assert vision.p_hat > 0.95
        assert abs(final.p_hat - 0.5) < 0.1


class TestGenPredictions:
    def _probe_set(self, dataset):
        results = classify_all(dataset.store, dataset.samples)
        return PredictionSet("probe", {r.sample_id: r.predicted for r in results})

    def test_full_agreement(self):
        dataset = generate(
            SynthConfig(seed=10, dim=8, num_samples=200, separation=2.0, gen_agreement=1.0)
        )
        assert dataset.gen_predictions.predictions == self._probe_set(dataset).predictions
        dep = chi2_dependence(self._probe_set(dataset), dataset.gen_predictions)
        assert dep.significant and dep.direction == "positive" and dep.p_value < 1e-10

    def test_flip_to_inverse(self):
        dataset = generate(
            SynthConfig(
                seed=11, dim=8, num_samples=300, separation=3.0,
                gen_agreement=0.2, flip_to_inverse=True,
            )
        )
        dep = chi2_dependence(self._probe_set(dataset), dataset.gen_predictions)
        assert dep.significant and dep.direction == "inverse"

    def test_agreement_rate_tracks_parameter(self):
        dataset = generate(
            SynthConfig(seed=12, dim=8, num_samples=500, separation=2.0, gen_agreement=0.8)
        )
        probe = self._probe_set(dataset).predictions
        gen = dataset.gen_predictions.predictions
        agree = sum(1 for k in probe if probe[k] == gen[k]) / len(probe)
        # without flip, disagreement draws are fair coins: E[agree] = 0.9
        assert abs(agree - 0.9) < 0.05


class TestOracle:
    def test_hand_planted_sample(self):
        store = EmbeddingStore(
            [
                EmbeddingRecord("p0", "vision", [[1.0, 0.0]]),
                EmbeddingRecord("p1", "vision", [[0.9, 0.1]]),
                EmbeddingRecord("n0", "vision", [[0.0, 1.0]]),
                EmbeddingRecord("n1", "vision", [[0.1, 0.9]]),
                EmbeddingRecord("q", "vision", [[1.0, 0.05]]),
            ]
        )
        samples = (BongardSample("s0", ("p0", "p1"), ("n0", "n1"), "q", "positive"),)
        dataset = SynthDataset(
            config=SynthConfig(seed=0, dim=2, num_samples=1, k=2),
            store=store,
            samples=samples,
            gen_predictions=PredictionSet("gen", {"s0": "positive"}),
            bayes_accuracy=1.0,
        )
        assert oracle_predictions(dataset) == {"s0": "positive"}
        assert oracle_nearest_centroid(dataset) == 1.0

    def test_flipping_labels_complements_accuracy(self):
        dataset = generate(SynthConfig(seed=13, dim=6, num_samples=41, separation=1.0))
        acc = oracle_nearest_centroid(dataset)
        flipped_samples = tuple(
            BongardSample(
                s.sample_id, s.positives, s.negatives, s.query,
                "negative" if s.truth == "positive" else "positive",
            )
            for s in dataset.samples
        )
        flipped = SynthDataset(
            config=dataset.config,
            store=dataset.store,
            samples=flipped_samples,
            gen_predictions=dataset.gen_predictions,
            bayes_accuracy=dataset.bayes_accuracy,
        )
        assert oracle_nearest_centroid(flipped) == pytest.approx(1.0 - acc)

    def test_matches_probe_on_oracle_dataset(self):
        # seed-42 oracle dataset: exact agreement with the numpy probe path
        dataset = generate(SynthConfig(seed=42, dim=16, num_samples=500, separation=2.0))
        oracle = oracle_predictions(dataset)
        probe = {r.sample_id: r.predicted for r in classify_all(dataset.store, dataset.samples)}
        assert oracle == probe
        assert oracle_nearest_centroid(dataset) == probe_accuracy(dataset.store, dataset.samples).p_hat
