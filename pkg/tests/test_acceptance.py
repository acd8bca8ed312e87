"""Acceptance suite. Each test pins one criterion at its stated
tolerance and prints a single pass/fail line (visible under ``pytest -s``
or on failure)."""

import functools
import math
import struct
import time

import numpy as np
import pytest

from linsep import io
from linsep.analysis import decompose
from linsep.errors import ParseError
from linsep.objective import (
    LossTerms,
    ScheduleConfig,
    gradcheck,
    schedule_weights,
    sim_loss,
)
from linsep.probe import classify_all
from linsep.reports import decompose_report_dict
from linsep.stats import (
    AccuracyEstimate,
    chi2_sf,
    classify_taxonomy,
    dependence_from_table,
    margin_of_error,
)
from linsep.synth import SynthConfig, generate, oracle_predictions


def criterion(number, description):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[criterion {number}] FAIL: {description}")
                raise
            elapsed = time.perf_counter() - start
            print(f"[criterion {number}] PASS: {description} ({elapsed:.2f}s)")

        return wrapper

    return decorate


@criterion(1, "margin of error reproduces every published (p, n) pair")
def test_margin_of_error_reproduction():
    start = time.perf_counter()
    published = [
        (0.840, 500, 3.2),
        (0.590, 500, 4.3),
        (0.521, 800, 3.5),
        (0.760, 500, 3.7),
        (0.936, 500, 2.1),
    ]
    for p_hat, n, reported in published:
        assert round(100 * margin_of_error(p_hat, n), 1) == reported, (p_hat, n)
    assert time.perf_counter() - start < 1.0


@criterion(2, "taxonomy labels match the published decomposition rows")
def test_taxonomy_reproduction():
    def est(p):
        return AccuracyEstimate(p, 500)

    refined = classify_taxonomy(est(0.842), est(0.760), est(0.880))
    assert refined.bottleneck_class == "surpassed"
    assert refined.mechanism == "representation_refinement"

    post_repr = classify_taxonomy(est(0.936), est(0.868), est(0.748))
    assert post_repr.bottleneck_class == "surpassed"
    assert post_repr.mechanism == "post_representation_reasoning"

    bottleneck = classify_taxonomy(est(0.932), est(0.886), est(0.500))
    assert bottleneck.bottleneck_class == "linear_reasoning_bottleneck"
    assert bottleneck.mechanism is None


@criterion(3, "probe equals the brute-force oracle on 20 synthetic datasets")
def test_probe_oracle_equivalence():
    start = time.perf_counter()
    mismatches = 0
    for seed in range(1, 21):
        dim = 8 if seed <= 10 else 64
        dataset = generate(SynthConfig(seed=seed, dim=dim, num_samples=500, separation=2.0))
        oracle = oracle_predictions(dataset)
        probe = {
            r.sample_id: r.predicted for r in classify_all(dataset.store, dataset.samples)
        }
        mismatches += sum(1 for k in oracle if oracle[k] != probe[k])
    assert mismatches == 0
    assert time.perf_counter() - start < 30.0


@criterion(4, "analytic gradients match central differences on 100 instances")
def test_gradient_correctness():
    start = time.perf_counter()
    result = gradcheck(trials=100, seed=7, h=1e-5, threshold=1e-5)
    assert result.failures == 0
    assert result.max_rel_error < 1e-5
    assert time.perf_counter() - start < 10.0


@criterion(5, "chi-squared statistic, p boundary, and direction flip")
def test_chi_squared_correctness():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        a, b, c, d = (int(x) for x in rng.integers(0, 80, size=4))
        if 0 in (a + b, c + d, a + c, b + d):
            continue
        checked += 1
        dep = dependence_from_table(((a, b), (c, d)))
        n = a + b + c + d
        closed = n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
        assert abs(dep.chi2 - closed) < 1e-9
        swapped = dependence_from_table(((b, a), (d, c)))
        assert abs(swapped.chi2 - dep.chi2) < 1e-9
        assert abs(swapped.p_value - dep.p_value) < 1e-12
        if dep.direction != "none":
            assert {dep.direction, swapped.direction} == {"positive", "inverse"}
        else:
            assert swapped.direction == "none"
    assert abs(chi2_sf(3.841) - 0.05) < 1e-4


@criterion(6, "schedule endpoints and monotonicity")
def test_schedule_curves():
    cosine = ScheduleConfig("cosine", 1.6, 10_000)
    nt_w, sim_w = schedule_weights(cosine, 9_999)
    assert nt_w == 1.0 and sim_w == 0.0
    previous = -1.0
    for step in range(10_000):
        nt_w, _ = schedule_weights(cosine, step)
        assert nt_w >= previous
        previous = nt_w
    linear = ScheduleConfig("linear", 0.4, 37)
    assert schedule_weights(linear, 36) == (1.0, 0.4)


@criterion(7, "similarity-loss fixed points")
def test_sim_loss_fixed_points():
    assert abs(sim_loss(LossTerms(0.25, 0.25, 0.07)) - math.log(2.0)) < 1e-12
    assert sim_loss(LossTerms(0.9, 0.1, 0.07, "positive")) < 1e-4
    assert abs(sim_loss(LossTerms(0.9, 0.1, 0.07, "negative")) - 11.42858) < 1e-4


def _pipeline_report_bytes(tmp_path, tag):
    config = SynthConfig(
        seed=5, dim=8, num_samples=80, separation=1.5, final_transform="collapse"
    )
    dataset = generate(config)
    manifest_path = io.write_dataset(
        tmp_path / tag, "determinism", dataset.store, dataset.samples,
        predictions=[dataset.gen_predictions],
    )
    loaded = io.load_dataset(manifest_path)
    report = decompose(
        loaded.store, loaded.samples, [loaded.predictions["gen"]], "determinism"
    )
    report_path = tmp_path / f"{tag}.json"
    io.write_json(decompose_report_dict(report), report_path)
    return manifest_path, report_path.read_bytes()


@criterion(8, "pipeline determinism and exhaustive parse-error coverage")
def test_determinism_and_round_trip(tmp_path):
    manifest_a, bytes_a = _pipeline_report_bytes(tmp_path, "a")
    manifest_b, bytes_b = _pipeline_report_bytes(tmp_path, "b")
    assert bytes_a == bytes_b
    for name in ("manifest.json", "vision.lsce", "final.lsce", "preds_gen.json"):
        assert (manifest_a.parent / name).read_bytes() == (manifest_b.parent / name).read_bytes()

    # every distinct parse-error variant fires on a corrupted fixture
    valid_path = tmp_path / "valid.lsce"
    io.write_tensor_file(valid_path, [("img", np.arange(6, dtype=float).reshape(2, 3))])
    valid = bytearray(valid_path.read_bytes())

    def corrupted(mutate):
        data = bytearray(valid)
        mutate(data)
        path = tmp_path / "corrupt.lsce"
        path.write_bytes(bytes(data))
        with pytest.raises(ParseError) as excinfo:
            io.read_tensor_file(path)
        return excinfo.value.reason

    def truncate(data, size):
        del data[size:]

    reasons = [
        corrupted(lambda d: d.__setitem__(0, ord("X"))),
        corrupted(lambda d: struct.pack_into("<I", d, 4, 9)),
        corrupted(lambda d: struct.pack_into("<I", d, 8, 0)),
        corrupted(lambda d: struct.pack_into("<I", d, 12, 0)),
        corrupted(lambda d: struct.pack_into("<I", d, 16, 0)),
        corrupted(lambda d: truncate(d, 10)),
        corrupted(lambda d: truncate(d, 22)),
        corrupted(lambda d: d.__setitem__(slice(20, 23), b"\xff\xfe\xff")),
        corrupted(lambda d: truncate(d, len(d) - 4)),
        corrupted(lambda d: d.extend(b"?" * 8)),
    ]
    expected_fragments = [
        "bad magic",
        "unsupported version",
        "dim must be",
        "token_count must be",
        "id_length must be",
        "incomplete record header",
        "image_id truncated",
        "not valid UTF-8",
        "payload truncated",
        "incomplete record header",
    ]
    for reason, fragment in zip(reasons, expected_fragments):
        assert fragment in reason, (fragment, reason)
