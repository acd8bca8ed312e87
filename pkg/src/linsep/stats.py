"""Proportion intervals, CI-overlap comparisons, performance taxonomy,
and signed chi-squared dependence between prediction sets.

Margins of error use the Wald normal approximation with z = 1.959964; the
chi-squared test is uncorrected Pearson on a 2x2 table with one degree of
freedom. Comparisons between accuracies are pure interval arithmetic on
95% confidence intervals: an estimate is superior only when its lower
bound strictly exceeds the other's upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

from .errors import (
    DuplicateRow,
    InvalidProportion,
    MismatchedN,
    MismatchedSamples,
    NonPositiveN,
    ValidationError,
)

#: 95% two-sided normal critical value, pinned to six decimals.
Z95 = 1.959964

#: Significance threshold for the dependence test.
ALPHA = 0.05

Outcome = Literal["superior", "inferior", "indistinguishable"]
Direction = Literal["positive", "inverse", "none"]

PREDICTION_VALUES = ("positive", "negative", "invalid")


def margin_of_error(p_hat: float, n: int) -> float:
    """Half-width of the 95% Wald interval: z * sqrt(p(1-p)/n)."""
    if not 0.0 <= p_hat <= 1.0:
        raise InvalidProportion(f"proportion must lie in [0, 1], got {p_hat}")
    if n < 1 or int(n) != n:
        raise NonPositiveN(f"sample count must be a positive integer, got {n}")
    return Z95 * math.sqrt(p_hat * (1.0 - p_hat) / n)


@dataclass(frozen=True)
class AccuracyEstimate:
    """An accuracy with its 95% margin of error.

    ``per_class`` optionally carries the (truth-positive, truth-negative)
    subset estimates; either side may be None when its subset is empty.
    """

    p_hat: float
    n: int
    label: str = ""
    per_class: tuple["AccuracyEstimate | None", "AccuracyEstimate | None"] | None = None
    me: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "me", margin_of_error(self.p_hat, self.n))

    @property
    def lower(self) -> float:
        return self.p_hat - self.me

    @property
    def upper(self) -> float:
        return self.p_hat + self.me


def compare(a: AccuracyEstimate, b: AccuracyEstimate) -> Outcome:
    """CI-overlap comparison. Touching bounds count as overlap."""
    if a.lower > b.upper:
        return "superior"
    if b.lower > a.upper:
        return "inferior"
    return "indistinguishable"


@dataclass(frozen=True)
class TaxonomyLabel:
    """Outcome of the generative-vs-probe decomposition.

    ``mechanism`` is present exactly when the ceiling was surpassed.
    """

    bottleneck_class: Literal["surpassed", "linear_reasoning_bottleneck"]
    mechanism: Literal["representation_refinement", "post_representation_reasoning"] | None = None

    def __post_init__(self):
        if self.bottleneck_class == "surpassed":
            if self.mechanism is None:
                raise ValidationError("surpassed requires a mechanism")
        elif self.mechanism is not None:
            raise ValidationError("mechanism only applies when the ceiling is surpassed")


def classify_taxonomy(
    gen: AccuracyEstimate, lsc: AccuracyEstimate, final: AccuracyEstimate
) -> TaxonomyLabel:
    """Label one generative method against its probe ceilings.

    Surpassed means the generative CI sits strictly above the vision-stage
    ceiling; the mechanism is then read off the generative-vs-final
    comparison (superior -> reasoning beyond the final representations,
    otherwise refinement of the representations themselves).
    """
    if not (gen.n == lsc.n == final.n):
        raise MismatchedN(
            f"estimates cover different sample counts: gen n={gen.n}, lsc n={lsc.n}, final n={final.n}"
        )
    if compare(gen, lsc) != "superior":
        return TaxonomyLabel("linear_reasoning_bottleneck")
    if compare(gen, final) == "superior":
        return TaxonomyLabel("surpassed", "post_representation_reasoning")
    return TaxonomyLabel("surpassed", "representation_refinement")


@dataclass(frozen=True)
class PredictionSet:
    """Per-sample binary predictions of one method.

    Values are "positive", "negative", or "invalid" (unparseable output,
    excluded from accuracies and dependence pairing).
    """

    label: str
    predictions: Mapping[str, str]

    def __post_init__(self):
        frozen = dict(self.predictions)
        for sample_id, value in frozen.items():
            if value not in PREDICTION_VALUES:
                raise ValidationError(
                    f"prediction for sample {sample_id!r} must be one of "
                    f"{PREDICTION_VALUES}, got {value!r}"
                )
        object.__setattr__(self, "predictions", frozen)

    def sample_ids(self) -> frozenset[str]:
        return frozenset(self.predictions)

    def valid_items(self) -> dict[str, str]:
        return {s: v for s, v in self.predictions.items() if v != "invalid"}

    def invalid_count(self) -> int:
        return sum(1 for v in self.predictions.values() if v == "invalid")


def chi2_sf(x: float) -> float:
    """Survival function of chi-squared with 1 dof: erfc(sqrt(x/2))."""
    if x < 0:
        raise ValidationError(f"chi-squared statistic must be >= 0, got {x}")
    return math.erfc(math.sqrt(x / 2.0))


@dataclass(frozen=True)
class DependenceResult:
    """Signed chi-squared dependence between two binary prediction sets."""

    chi2: float
    p_value: float
    significant: bool
    direction: Direction
    table: tuple[tuple[int, int], tuple[int, int]]


def dependence_from_table(table, alpha: float = ALPHA) -> DependenceResult:
    """Pearson chi-squared (1 dof, no continuity correction) on a 2x2 table.

    Rows index the first method's positive/negative predictions, columns
    the second's. Direction is read from the odds ratio ad/bc, evaluated
    only when significant. A degenerate table (any zero marginal) is the
    no-dependence convention: chi2 = 0, p = 1, direction "none".
    """
    (a, b), (c, d) = table
    cells = (a, b, c, d)
    if any(int(x) != x or x < 0 for x in cells):
        raise ValidationError(f"table counts must be non-negative integers, got {cells}")
    a, b, c, d = (int(x) for x in cells)
    table = ((a, b), (c, d))
    n = a + b + c + d
    row1, row2, col1, col2 = a + b, c + d, a + c, b + d
    if 0 in (row1, row2, col1, col2):
        return DependenceResult(0.0, 1.0, False, "none", table)
    chi2 = 0.0
    for observed, rs, cs in ((a, row1, col1), (b, row1, col2), (c, row2, col1), (d, row2, col2)):
        expected = rs * cs / n
        chi2 += (observed - expected) ** 2 / expected
    p_value = chi2_sf(chi2)
    significant = p_value < alpha
    if not significant:
        direction: Direction = "none"
    else:
        direction = "positive" if a * d > b * c else "inverse"
    return DependenceResult(chi2, p_value, significant, direction, table)


def chi2_dependence(
    probe_preds: PredictionSet, gen_preds: PredictionSet, alpha: float = ALPHA
) -> DependenceResult:
    """Dependence between probe and generative predictions.

    Both sets must cover the same sample ids. Samples marked invalid in
    either set are dropped from the pairing.
    """
    if probe_preds.sample_ids() != gen_preds.sample_ids():
        only_a = sorted(probe_preds.sample_ids() - gen_preds.sample_ids())[:3]
        only_b = sorted(gen_preds.sample_ids() - probe_preds.sample_ids())[:3]
        raise MismatchedSamples(
            f"prediction sets cover different samples "
            f"(only in {probe_preds.label!r}: {only_a}, only in {gen_preds.label!r}: {only_b})"
        )
    a = b = c = d = 0
    left = probe_preds.valid_items()
    right = gen_preds.valid_items()
    for sample_id, p in left.items():
        g = right.get(sample_id)
        if g is None:
            continue
        if p == "positive":
            if g == "positive":
                a += 1
            else:
                b += 1
        else:
            if g == "positive":
                c += 1
            else:
                d += 1
    return dependence_from_table(((a, b), (c, d)), alpha=alpha)


@dataclass(frozen=True)
class ReportRow:
    """One generative method's full decomposition against the probes."""

    label: str
    estimates: Mapping[str, AccuracyEstimate]
    comparisons: Mapping[str, Outcome]
    taxonomy: TaxonomyLabel | None
    dependences: Mapping[str, DependenceResult]
    invalid_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "estimates", dict(self.estimates))
        object.__setattr__(self, "comparisons", dict(self.comparisons))
        object.__setattr__(self, "dependences", dict(self.dependences))


@dataclass(frozen=True)
class EvalReport:
    """Deterministic, label-sorted collection of report rows with tallies."""

    dataset: str
    rows: tuple[ReportRow, ...]
    tallies: Mapping[str, int]


def aggregate_report(dataset: str, rows: Sequence[ReportRow]) -> EvalReport:
    """Sort rows by label and tally significant/inverse dependences."""
    seen: set[str] = set()
    for row in rows:
        if row.label in seen:
            raise DuplicateRow(f"duplicate report row label {row.label!r}")
        seen.add(row.label)
    ordered = tuple(sorted(rows, key=lambda r: r.label))
    significant = inverse = total = 0
    for row in ordered:
        for dep in row.dependences.values():
            total += 1
            if dep.significant:
                significant += 1
            if dep.direction == "inverse":
                inverse += 1
    tallies = {"significant": significant, "inverse": inverse, "total": total}
    return EvalReport(dataset=dataset, rows=ordered, tallies=tallies)
