"""Report files: summary tables, ANOVA/grouping results, curve points.

Also owns the per-fold predictions JSONL interchange format produced by
`evaluate` and consumed by `stats` and `calibrate`: a header line
{"schema_version": 1, "classes": [...]}, then one row per prediction
{"fold": int, "arch": str, "record_id": str, "true": str, "scores": [...]}
with scores aligned to the header's class order.

All emitted files are deterministic functions of their inputs: fixed float
formatting, sorted iteration, no timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from tankloc.errors import ReportError
from tankloc.evaluation.anova import AnovaResult
from tankloc.evaluation.metrics import SummaryStats
from tankloc.evaluation.roc import OvrRocResult, RocCurve
from tankloc.evaluation.scott_knott import ScottKnottGrouping
from tankloc.evaluation.tradeoff import TradeoffPoint

SCHEMA_VERSION = 1

METRIC_NAMES = ("precision", "recall", "fscore")


@dataclass(frozen=True)
class PredictionRow:
    fold: int
    arch: str
    record_id: str
    true_label: str
    scores: tuple[float, ...]


def write_predictions(
    path: str | Path, classes: Sequence[str], rows: Sequence[PredictionRow]
) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"schema_version": SCHEMA_VERSION, "classes": list(classes)}) + "\n")
        for r in rows:
            fh.write(
                json.dumps(
                    {
                        "fold": r.fold,
                        "arch": r.arch,
                        "record_id": r.record_id,
                        "true": r.true_label,
                        "scores": list(r.scores),
                    }
                )
                + "\n"
            )


def read_predictions(path: str | Path) -> tuple[list[str], list[PredictionRow]]:
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError as exc:
        raise ReportError(f"predictions file not found: {path}") from exc
    if not lines:
        raise ReportError(f"predictions file is empty: {path}")
    header = json.loads(lines[0])
    if header.get("schema_version") != SCHEMA_VERSION or "classes" not in header:
        raise ReportError("predictions file lacks a valid header line")
    classes = list(header["classes"])
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        d = json.loads(line)
        rows.append(
            PredictionRow(
                fold=int(d["fold"]),
                arch=d["arch"],
                record_id=d["record_id"],
                true_label=d["true"],
                scores=tuple(float(s) for s in d["scores"]),
            )
        )
    return classes, rows


def format_mean_with_letter(mean: float, letter: str) -> str:
    return f"{mean:.7f} {letter}"


def render_summary_row(stats: SummaryStats, letter: str) -> str:
    """One table row: median, IQR, mean with group letter, SD."""
    return (
        f"{stats.median:.7f}, {stats.iqr:.7f}, "
        f"{format_mean_with_letter(stats.mean, letter)}, {stats.sd:.7f}"
    )


def _write_curve_csv(path: Path, curve: RocCurve) -> None:
    lines = ["fpr,tpr,threshold"]
    for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
        lines.append(f"{f:.10g},{t:.10g},{th:.10g}")
    path.write_text("\n".join(lines) + "\n")


def emit_report(
    summaries: Mapping[str, Mapping[str, SummaryStats]],
    anovas: Mapping[str, AnovaResult],
    groupings: Mapping[str, ScottKnottGrouping],
    curves: Mapping[str, OvrRocResult],
    front: Sequence[TradeoffPoint],
    out_dir: str | Path,
) -> list[Path]:
    """Write the comparison report; returns the files written.

    ``summaries`` maps architecture -> metric -> stats; ``anovas`` and
    ``groupings`` map metric name -> result. ``curves`` (possibly empty)
    maps architecture -> its OvR ROC result.
    """
    if not summaries:
        raise ReportError("no architectures to report")
    archs = sorted(summaries)
    for metric, grouping in groupings.items():
        if sorted(grouping.means) != archs:
            raise ReportError(
                f"grouping for {metric!r} covers {sorted(grouping.means)}, expected {archs}"
            )
    front_names = sorted(p.name for p in front)
    if front and front_names != archs:
        raise ReportError(f"trade-off points cover {front_names}, expected {archs}")

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ReportError(f"output directory not writable: {out}") from exc

    written: list[Path] = []

    table = out / "metrics_summary.csv"
    lines = ["architecture,metric,median,iqr,mean,sd"]
    for arch in archs:
        for metric in METRIC_NAMES:
            if metric not in summaries[arch]:
                continue
            stats = summaries[arch][metric]
            letter = groupings[metric].letter_of(arch) if metric in groupings else ""
            mean_cell = format_mean_with_letter(stats.mean, letter) if letter else f"{stats.mean:.7f}"
            lines.append(
                f"{arch},{metric},{stats.median:.7f},{stats.iqr:.7f},{mean_cell},{stats.sd:.7f}"
            )
    table.write_text("\n".join(lines) + "\n")
    written.append(table)

    anova_csv = out / "anova.csv"
    lines = ["metric,f_statistic,p_value,df_between,df_within,ss_between,ss_within,mse"]
    for metric in sorted(anovas):
        a = anovas[metric]
        lines.append(
            f"{metric},{a.f_statistic:.10g},{a.p_value:.10g},{a.df_between},"
            f"{a.df_within},{a.ss_between:.10g},{a.ss_within:.10g},{a.mse:.10g}"
        )
    anova_csv.write_text("\n".join(lines) + "\n")
    written.append(anova_csv)

    grouping_json = out / "grouping.json"
    payload = {
        metric: {
            "groups": [list(g) for g in grouping.groups],
            "letters": list(grouping.letters),
            "means": {n: grouping.means[n] for n in sorted(grouping.means)},
            "splits": [
                {
                    "members": list(d.members),
                    "b0": d.b0,
                    "lambda": d.lambda_stat,
                    "critical_value": d.critical_value,
                    "dof": d.dof,
                    "split": d.split,
                }
                for d in grouping.diagnostics
            ],
        }
        for metric, grouping in sorted(groupings.items())
    }
    grouping_json.write_text(json.dumps(payload, indent=2, sort_keys=True))
    written.append(grouping_json)

    for arch in sorted(curves):
        result = curves[arch]
        safe = arch.replace("/", "_")
        for scope, curve in (("micro", result.micro), ("macro", result.macro)):
            path = out / f"roc_{safe}_{scope}.csv"
            _write_curve_csv(path, curve)
            written.append(path)

    front_csv = out / "tradeoff_front.csv"
    lines = ["architecture,params,mean_fscore,on_front"]
    for p in sorted(front, key=lambda p: p.params):
        lines.append(f"{p.name},{p.params},{p.mean_fscore:.7f},{str(p.on_front).lower()}")
    front_csv.write_text("\n".join(lines) + "\n")
    written.append(front_csv)

    summary_txt = out / "summary.txt"
    text = ["Architecture comparison", "=" * 23, ""]
    for metric in METRIC_NAMES:
        if metric not in anovas:
            continue
        a = anovas[metric]
        text.append(f"{metric}: F={a.f_statistic:.6g}, p={a.p_value:.6g}")
        if metric in groupings:
            g = groupings[metric]
            for letter, group in zip(g.letters, g.groups):
                members = ", ".join(f"{n} ({g.means[n]:.7f})" for n in group)
                text.append(f"  group {letter}: {members}")
        text.append("")
    if front:
        best = [p.name for p in sorted(front, key=lambda p: p.params) if p.on_front]
        text.append("best size/accuracy trade-off: " + ", ".join(best))
        text.append("")
    summary_txt.write_text("\n".join(text))
    written.append(summary_txt)

    return written
