"""Report dictionaries and their markdown / CSV / scatter renderings.

Accuracy-like numbers are serialized to 6 significant digits; raw
similarities and test statistics keep full precision. Everything is
emitted in sorted order so identical inputs give identical bytes.
"""

from __future__ import annotations

from typing import Sequence

from .errors import ValidationError
from .probe import BongardSample, ProbeResult
from .stats import AccuracyEstimate, DependenceResult, EvalReport


def sig6(x: float) -> float:
    return float(f"{x:.6g}")


def estimate_dict(est: AccuracyEstimate) -> dict:
    out = {"label": est.label, "p_hat": sig6(est.p_hat), "n": est.n, "me": sig6(est.me)}
    if est.per_class is not None:
        pos, neg = est.per_class
        out["per_class"] = {
            "positive": estimate_dict(pos) if pos is not None else None,
            "negative": estimate_dict(neg) if neg is not None else None,
        }
    return out


def dependence_dict(dep: DependenceResult) -> dict:
    return {
        "chi2": dep.chi2,
        "p_value": dep.p_value,
        "significant": dep.significant,
        "direction": dep.direction,
        "table": [list(row) for row in dep.table],
    }


def decompose_report_dict(report: EvalReport) -> dict:
    rows = []
    for row in report.rows:
        rows.append(
            {
                "label": row.label,
                "estimates": {k: estimate_dict(v) for k, v in sorted(row.estimates.items())},
                "comparisons": dict(sorted(row.comparisons.items())),
                "taxonomy": None
                if row.taxonomy is None
                else {
                    "bottleneck_class": row.taxonomy.bottleneck_class,
                    "mechanism": row.taxonomy.mechanism,
                },
                "dependences": {k: dependence_dict(v) for k, v in sorted(row.dependences.items())},
                "invalid_count": row.invalid_count,
            }
        )
    return {
        "command": "decompose",
        "dataset": report.dataset,
        "rows": rows,
        "tallies": dict(report.tallies),
    }


def probe_report_dict(
    dataset: str,
    stage: str,
    context: str,
    pooling: str,
    estimate: AccuracyEstimate,
    results: Sequence[ProbeResult],
    samples: Sequence[BongardSample],
) -> dict:
    truths = {s.sample_id: s.truth for s in samples}
    return {
        "command": "probe",
        "dataset": dataset,
        "stage": stage,
        "context": context,
        "pooling": pooling,
        "estimate": estimate_dict(estimate),
        "results": [
            {
                "sample_id": r.sample_id,
                "truth": truths[r.sample_id],
                "predicted": r.predicted,
                "sim_pos": r.sim_pos,
                "sim_neg": r.sim_neg,
            }
            for r in results
        ],
    }


def _pct(value: float, me: float | None = None) -> str:
    if me is None:
        return f"{100 * value:.1f}"
    return f"{100 * value:.1f} ± {100 * me:.1f}"


def _method_letters(labels: Sequence[str]) -> dict[str, str]:
    # One superscript mark per generative method: its first letter
    # uppercased, falling back to the full label on collision.
    letters: dict[str, str] = {}
    used: set[str] = set()
    for label in labels:
        mark = label[:1].upper() or label
        if mark in used:
            mark = label
        used.add(mark)
        letters[label] = mark
    return letters


def _superscript(report_dict: dict, stage: str, letters: dict[str, str]) -> str:
    marks = []
    for row in report_dict["rows"]:
        dep = row["dependences"][stage]
        if dep["significant"]:
            prefix = "-" if dep["direction"] == "inverse" else ""
            marks.append(prefix + letters[row["label"]])
    return "^{" + ",".join(marks) + "}" if marks else ""


def decompose_markdown(report_dict: dict) -> str:
    """One table row per dataset: a generative column per method plus the
    shared probe columns, with dependence superscripts on the probe
    cells (leading '-' marks inverse dependence)."""
    rows = report_dict["rows"]
    labels = [r["label"] for r in rows]
    letters = _method_letters(labels)
    header = ["Dataset"] + [f"{label} (%)" for label in labels] + ["Vision (%)", "Final (%)"]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join([" --- "] * len(header)) + "|",
    ]
    cells = [report_dict["dataset"]]
    for row in rows:
        est = row["estimates"]["gen"]
        cells.append(_pct(est["p_hat"], est["me"]))
    if rows:
        lsc = rows[0]["estimates"]["lsc"]
        final = rows[0]["estimates"]["final"]
        cells.append(_pct(lsc["p_hat"], lsc["me"]) + _superscript(report_dict, "vision", letters))
        cells.append(_pct(final["p_hat"], final["me"]) + _superscript(report_dict, "final", letters))
    else:
        cells += ["", ""]
    lines.append("| " + " | ".join(cells) + " |")

    pathway_lines = []
    for row in rows:
        if row["taxonomy"] is None:
            continue
        mechanism = row["taxonomy"]["mechanism"]
        suffix = f" ({mechanism})" if mechanism else ""
        pathway_lines.append(f"- {row['label']}: {row['taxonomy']['bottleneck_class']}{suffix}")
    if pathway_lines:
        lines += ["", "Pathways:", *pathway_lines]
    tallies = report_dict["tallies"]
    lines += [
        "",
        f"Dependence tallies: {tallies['significant']} significant "
        f"({tallies['inverse']} inverse) of {tallies['total']}.",
    ]
    return "\n".join(lines) + "\n"


def decompose_csv(report_dict: dict) -> str:
    header = (
        "label,gen_p,gen_me,gen_n,lsc_p,lsc_me,final_p,final_me,"
        "gen_vs_lsc,gen_vs_final,bottleneck_class,mechanism,"
        "chi2_vision,p_vision,direction_vision,chi2_final,p_final,direction_final,invalid_count"
    )
    lines = [header]
    for row in report_dict["rows"]:
        gen = row["estimates"]["gen"]
        lsc = row["estimates"]["lsc"]
        final = row["estimates"]["final"]
        taxonomy = row["taxonomy"] or {}
        dep_v = row["dependences"]["vision"]
        dep_f = row["dependences"]["final"]
        lines.append(
            ",".join(
                str(x)
                for x in (
                    row["label"],
                    gen["p_hat"], gen["me"], gen["n"],
                    lsc["p_hat"], lsc["me"],
                    final["p_hat"], final["me"],
                    row["comparisons"]["gen_vs_lsc"],
                    row["comparisons"]["gen_vs_final"],
                    taxonomy.get("bottleneck_class", ""),
                    taxonomy.get("mechanism") or "",
                    sig6(dep_v["chi2"]), sig6(dep_v["p_value"]), dep_v["direction"],
                    sig6(dep_f["chi2"]), sig6(dep_f["p_value"]), dep_f["direction"],
                    row["invalid_count"],
                )
            )
        )
    return "\n".join(lines) + "\n"


def decompose_scatter(report_dict: dict) -> str:
    """(ceiling, generative accuracy) pairs, one per method."""
    lines = ["label,lsc,acc_gen"]
    for row in report_dict["rows"]:
        lines.append(
            f"{row['label']},{row['estimates']['lsc']['p_hat']},{row['estimates']['gen']['p_hat']}"
        )
    return "\n".join(lines) + "\n"


def probe_markdown(report_dict: dict) -> str:
    est = report_dict["estimate"]
    per_class = est.get("per_class") or {}
    lines = [
        f"# Probe report: {report_dict['dataset']}",
        "",
        "| Stage | Context | Pooling | Accuracy (%) | Positive (%) | Negative (%) | n |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    def cell(side):
        sub = per_class.get(side)
        return _pct(sub["p_hat"], sub["me"]) if sub else "-"
    lines.append(
        "| {stage} | {context} | {pooling} | {acc} | {pos} | {neg} | {n} |".format(
            stage=report_dict["stage"],
            context=report_dict["context"],
            pooling=report_dict["pooling"],
            acc=_pct(est["p_hat"], est["me"]),
            pos=cell("positive"),
            neg=cell("negative"),
            n=est["n"],
        )
    )
    return "\n".join(lines) + "\n"


def probe_csv(report_dict: dict) -> str:
    lines = ["sample_id,truth,predicted,sim_pos,sim_neg"]
    for r in report_dict["results"]:
        lines.append(f"{r['sample_id']},{r['truth']},{r['predicted']},{r['sim_pos']},{r['sim_neg']}")
    return "\n".join(lines) + "\n"


def render(report_dict: dict, fmt: str) -> str:
    command = report_dict.get("command")
    if command == "decompose":
        if fmt == "md":
            return decompose_markdown(report_dict)
        if fmt == "csv":
            return decompose_csv(report_dict)
        if fmt == "scatter":
            return decompose_scatter(report_dict)
    elif command == "probe":
        if fmt == "md":
            return probe_markdown(report_dict)
        if fmt == "csv":
            return probe_csv(report_dict)
        if fmt == "scatter":
            raise ValidationError("scatter output needs a decompose report")
    else:
        raise ValidationError(f"unrecognized report kind {command!r}")
    raise ValidationError(f"unknown report format {fmt!r}")
