"""Study report assembly: workbook aggregates, JSON summary, SVG charts.

Every number in the report is a pure function of the screening records and
siting outcomes, so an independent aggregation over the raw CSVs must
reproduce it exactly; a mismatch between records and summaries is treated as
a pipeline bug and raised, not papered over. Output is deterministic except
for the single generated_at timestamp in summary.json.

Charts are emitted as self-contained SVG (no plotting dependency), and every
figure also exists as CSV so any external tool can re-plot it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .network import NetworkModel
from .screening import LineSummary, OverloadRecord, summarize
from .siting import PfcOutcome, PfcRanking

SCHEMA_VERSION = 1


class ReportConsistencyError(RuntimeError):
    """Raw records and rolled-up summaries disagree: a pipeline bug."""


@dataclass(frozen=True)
class StudyReport:
    scenario: str
    config_hash: str
    parameters: dict
    dispatch_stats: dict
    screening_stats: dict
    regional: dict[str, int]
    line_durations: list[dict]
    pfc_rows: list[dict]
    breakdown_pct: dict[str, float]
    ranking_rows: list[dict] = field(default_factory=list)


def build_report(
    summaries: list[LineSummary],
    outcomes: list[PfcOutcome],
    model: NetworkModel,
    parameters: dict,
    records: list[OverloadRecord] | None = None,
    ranking: PfcRanking | None = None,
    dispatch_stats: dict | None = None,
    scenario: str = "",
    config_hash: str = "",
) -> StudyReport:
    """Aggregate stage outputs into one report structure.

    When the raw records are supplied, the summaries are recomputed from them
    and compared; any discrepancy is a hard error. Regional counts must tie
    out against the number of overloaded lines.
    """
    regional: dict[str, int] = {}
    for s in summaries:
        if s.line_id not in model.line_by_id:
            raise ReportConsistencyError(f"summary for unknown line {s.line_id}")
        if s.overload_hours:
            regional[s.region] = regional.get(s.region, 0) + 1

    if records is not None:
        recomputed, recomputed_regional = summarize(records, model)
        if recomputed != summaries:
            raise ReportConsistencyError(
                "line summaries do not match the raw overload records"
            )
        if recomputed_regional != regional:
            raise ReportConsistencyError(
                "regional rollup does not match the raw overload records"
            )

    overloaded_lines = sum(1 for s in summaries if s.overload_hours)
    if sum(regional.values()) != overloaded_lines:
        raise ReportConsistencyError("regional counts do not tie out")

    n = len(outcomes)
    counts = {"FullyResolved": 0, "PartiallyResolved": 0, "NoChange": 0}
    for o in outcomes:
        counts[o.classification] += 1
    breakdown = {
        k: (100.0 * v / n if n else 0.0) for k, v in sorted(counts.items())
    }

    screening_stats = {
        "overloaded_lines": overloaded_lines,
        "lines_with_records": len(summaries),
        "total_overload_hours": sum(s.overload_hours for s in summaries),
        "total_near_hours": sum(s.near_hours for s in summaries),
    }
    if records is not None:
        screening_stats["overload_records"] = sum(
            1 for r in records if r.category == "overload"
        )
        screening_stats["near_records"] = sum(
            1 for r in records if r.category == "near"
        )

    line_durations = [
        {
            "line": s.line_id,
            "region": s.region,
            "overload_hours": s.overload_hours,
            "near_hours": s.near_hours,
            "max_loading_pct": s.max_loading_pct,
            "overload_energy_mwh": s.overload_energy_mwh,
            "contingency_count": s.contingency_count,
        }
        for s in summaries
    ]
    pfc_rows = [
        {
            "target_line": o.target_line,
            "classification": o.classification,
            "pfc_line": o.pfc_line,
            "delta_pct": o.delta_pct,
            "overload_hours": o.overload_hours,
            "resolved_hours": o.resolved_hours,
            "resolved_fraction": o.resolved_fraction,
            "residual_max_loading_pct": o.residual_max_loading_pct,
            "side_effect_lines": list(o.side_effect_lines),
        }
        for o in sorted(outcomes, key=lambda o: o.target_line)
    ]
    ranking_rows = []
    if ranking is not None:
        ranking_rows = [
            {
                "rank": e.rank,
                "target_line": e.target_line,
                "classification": e.classification,
                "overload_hours": e.overload_hours,
                "resolved_fraction": e.resolved_fraction,
                "delta_pct": e.delta_pct,
            }
            for e in ranking.entries
        ]
    return StudyReport(
        scenario=scenario,
        config_hash=config_hash,
        parameters=dict(parameters),
        dispatch_stats=dict(dispatch_stats or {}),
        screening_stats=screening_stats,
        regional=dict(sorted(regional.items())),
        line_durations=line_durations,
        pfc_rows=pfc_rows,
        breakdown_pct=breakdown,
        ranking_rows=ranking_rows,
    )


# -- emission ----------------------------------------------------------------


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _bar_chart_svg(title: str, labels: list[str], values: list[float], unit: str) -> str:
    width, height = 720, 400
    margin_left, margin_bottom, margin_top = 60, 70, 40
    plot_w = width - margin_left - 20
    plot_h = height - margin_top - margin_bottom
    vmax = max(values) if values and max(values) > 0 else 1.0
    n = max(len(values), 1)
    slot = plot_w / n
    bar_w = slot * 0.7

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        f'<line x1="{margin_left}" y1="{margin_top + plot_h}" '
        f'x2="{margin_left + plot_w}" y2="{margin_top + plot_h}" stroke="black"/>',
        f'<line x1="{margin_left}" y1="{margin_top}" '
        f'x2="{margin_left}" y2="{margin_top + plot_h}" stroke="black"/>',
        f'<text x="16" y="{margin_top + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {margin_top + plot_h / 2:.1f})">{unit}</text>',
    ]
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * value / vmax
        x = margin_left + i * slot + (slot - bar_w) / 2
        y = margin_top + plot_h - h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
            f'fill="#4682b4"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.2f}" y="{y - 4:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{value:.6g}</text>'
        )
        lx = x + bar_w / 2
        ly = margin_top + plot_h + 12
        parts.append(
            f'<text x="{lx:.2f}" y="{ly:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" '
            f'transform="rotate(-45 {lx:.2f} {ly:.2f})">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(
    report: StudyReport,
    out_dir,
    formats: set[str] = frozenset({"csv", "svg"}),
    extra_files: list[str] | None = None,
    timestamp: str | None = None,
) -> list[dict]:
    """Write the report directory; returns the manifest (also written as JSON).

    Layout: report/summary.json, report/*.csv, report/charts/*.svg and
    report/manifest.json with a checksum for every emitted file plus any
    ``extra_files`` the caller wants covered (the stage workbooks). The
    generated_at timestamp in summary.json is the only non-reproducible byte.
    """
    out_dir = Path(out_dir)
    report_dir = out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary = {
        "schema_version": SCHEMA_VERSION,
        "generated_at": timestamp
        or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "scenario": report.scenario,
        "config_hash": report.config_hash,
        "parameters": report.parameters,
        "dispatch": report.dispatch_stats,
        "screening": report.screening_stats,
        "regional_overloaded_lines": report.regional,
        "line_durations": report.line_durations,
        "pfc_outcomes": report.pfc_rows,
        "pfc_breakdown_pct": report.breakdown_pct,
        "pfc_ranking": report.ranking_rows,
    }
    path = report_dir / "summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)

    if "csv" in formats:
        path = report_dir / "region_summary.csv"
        _write_csv(
            path,
            ["region", "overloaded_lines"],
            [[r, c] for r, c in report.regional.items()],
        )
        written.append(path)

        path = report_dir / "line_durations.csv"
        _write_csv(
            path,
            [
                "line",
                "region",
                "overload_hours",
                "near_hours",
                "max_loading_pct",
                "overload_energy_mwh",
                "contingency_count",
            ],
            [
                [
                    d["line"],
                    d["region"],
                    d["overload_hours"],
                    d["near_hours"],
                    repr(d["max_loading_pct"]),
                    repr(d["overload_energy_mwh"]),
                    d["contingency_count"],
                ]
                for d in report.line_durations
            ],
        )
        written.append(path)

        path = report_dir / "pfc_performance.csv"
        _write_csv(
            path,
            [
                "target_line",
                "classification",
                "pfc_line",
                "delta_pct",
                "overload_hours",
                "resolved_hours",
                "resolved_fraction",
                "residual_max_loading_pct",
                "side_effect_lines",
            ],
            [
                [
                    row["target_line"],
                    row["classification"],
                    row["pfc_line"] or "",
                    "" if row["delta_pct"] is None else repr(row["delta_pct"]),
                    row["overload_hours"],
                    row["resolved_hours"],
                    repr(row["resolved_fraction"]),
                    repr(row["residual_max_loading_pct"]),
                    ";".join(row["side_effect_lines"]),
                ]
                for row in report.pfc_rows
            ],
        )
        written.append(path)

    if "svg" in formats:
        charts = report_dir / "charts"
        charts.mkdir(exist_ok=True)
        overloaded = [d for d in report.line_durations if d["overload_hours"]]
        path = charts / "duration_per_line.svg"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                _bar_chart_svg(
                    "Overload duration by line",
                    [d["line"] for d in overloaded],
                    [float(d["overload_hours"]) for d in overloaded],
                    "hours",
                )
            )
        written.append(path)

        path = charts / "resolution_breakdown.svg"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                _bar_chart_svg(
                    "PFC outcome breakdown",
                    list(report.breakdown_pct),
                    [report.breakdown_pct[k] for k in report.breakdown_pct],
                    "percent of targets",
                )
            )
        written.append(path)

    manifest = []
    covered = [str(p) for p in written] + list(extra_files or [])
    for file_path in sorted(covered):
        p = Path(file_path)
        rel = p.relative_to(out_dir) if p.is_relative_to(out_dir) else p
        manifest.append(
            {"file": str(rel), "sha256": _sha256(p), "bytes": p.stat().st_size}
        )
    with open(report_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
