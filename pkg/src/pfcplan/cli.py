"""Command line pipeline: dispatch -> screen -> site-pfc -> report.

Exit codes: 0 success, 2 validation error, 3 dispatch finished with infeasible
hours (outputs still written), 4 solver failure. Each stage writes its outputs
plus a meta file carrying the config content hash; a later stage refuses stale
upstream outputs, and run-all reuses a cached dispatch when the hash matches.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dcflow, dispatch, report, screening, shift_factors, siting
from .config import ConfigError, StudyConfig, apply_overrides, load_config
from .network import (
    HOURS_PER_YEAR,
    NetworkDataError,
    NetworkModel,
    filter_monitored_lines,
    load_network,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


def _parse_levels(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad voltage level list: {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfcplan",
        description="Locate and size series-reactance power flow controllers "
        "from a year of hourly DC load flows and N-1 screening.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("dispatch", "produce the 8,760-hour merit-order dispatch"),
        ("screen", "run Stage 1 (intact) and Stage 2 (N-1) overload scans"),
        ("site-pfc", "run Stage 3 PFC siting, ranking, and the report"),
        ("report", "re-emit the report from existing stage outputs"),
        ("run-all", "run every stage in sequence"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="study config JSON")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument(
            "--workers", type=int,
            help="worker count (reserved; the solvers are vectorized)",
        )
        p.add_argument(
            "--voltage-levels", type=_parse_levels,
            help="comma separated kV levels to monitor, e.g. 110 or 110,220",
        )
        p.add_argument("--pfc-cap", type=float, help="max reactance increase, percent")
        p.add_argument(
            "--screen-from-stage1", action="store_true", default=None,
            help="Stage 2 monitors only lines flagged in Stage 1",
        )
    return parser


def _meta_path(cfg: StudyConfig, stage: str) -> Path:
    return Path(cfg.out_dir) / f"{stage}_meta.json"


def _write_meta(cfg: StudyConfig, stage: str, content_hash: str) -> None:
    with open(_meta_path(cfg, stage), "w", encoding="utf-8") as fh:
        json.dump({"config_hash": content_hash}, fh, sort_keys=True)
        fh.write("\n")


def _stage_fresh(cfg: StudyConfig, stage: str, content_hash: str, files: list[str]) -> bool:
    meta = _meta_path(cfg, stage)
    if not meta.exists():
        return False
    try:
        recorded = json.loads(meta.read_text())["config_hash"]
    except (json.JSONDecodeError, KeyError):
        return False
    if recorded != content_hash:
        return False
    return all((Path(cfg.out_dir) / f).exists() for f in files)


def _load_study(cfg: StudyConfig):
    model = load_network(
        cfg.inputs["buses"],
        cfg.inputs["lines"],
        cfg.inputs["generators"],
        slack_bus=cfg.slack_bus,
        system_base_mva=cfg.system_base_mva,
    )
    profile = dispatch.load_demand_profile(
        cfg.inputs["demand"], cfg.inputs["bus_shares"]
    )
    for bus_id in profile.bus_shares:
        if bus_id not in model.bus_by_id:
            raise NetworkDataError(f"bus_shares references unknown bus {bus_id}")
    availability = dispatch.load_res_availability(cfg.inputs["res_availability"])
    return model, profile, availability


def _read_dispatch_outputs(
    cfg: StudyConfig, model: NetworkModel, profile: dispatch.DemandProfile
) -> dispatch.DispatchYear:
    out = Path(cfg.out_dir)
    gen_pos = {gid: i for i, gid in enumerate(model.generator_ids)}
    outputs = np.zeros((HOURS_PER_YEAR, len(gen_pos)))
    with open(out / "dispatch.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            outputs[int(row["hour"]), gen_pos[row["generator"]]] = float(
                row["output_mw"]
            )
    summary = json.loads((out / "dispatch_summary.json").read_text())
    infeasible = set(summary["infeasible_hours"])
    hours = tuple(
        dispatch.DispatchHour(
            hour=h,
            outputs_mw=outputs[h],
            demand_mw=float(profile.demand_mw[h]),
            curtailed_mw=float(summary["curtailment_mwh"][h]),
            snsp=float(summary["snsp"][h]),
            feasible=h not in infeasible,
        )
        for h in range(HOURS_PER_YEAR)
    )
    return dispatch.DispatchYear(
        hours=hours,
        generator_ids=model.generator_ids,
        snsp_cap=cfg.snsp_cap,
        scenario=summary.get("scenario", cfg.scenario),
    )


DISPATCH_FILES = ["dispatch.csv", "dispatch_summary.json"]
SCREEN_FILES = [
    "overloads.csv",
    "line_summary.csv",
    "region_summary.csv",
    "duration_histogram.csv",
    "severity.csv",
]
SITING_FILES = ["pfc_outcomes.csv", "pfc_ranking.csv", "pfc_outcomes_detail.json"]


def cmd_dispatch(cfg: StudyConfig) -> int:
    content_hash = cfg.content_hash("dispatch")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, profile, availability = _load_study(cfg)
    if _stage_fresh(cfg, "dispatch", content_hash, DISPATCH_FILES):
        summary = json.loads((out / "dispatch_summary.json").read_text())
        infeasible = summary["infeasible_hours"]
        print(f"dispatch: cached ({len(infeasible)} infeasible hours)")
        return EXIT_INFEASIBLE if infeasible else EXIT_OK
    year = dispatch.run_year(
        model, profile, availability, cfg.snsp_cap, scenario=cfg.scenario
    )
    dispatch.write_dispatch_csv(year, out / "dispatch.csv")
    dispatch.write_dispatch_summary(
        year, out / "dispatch_summary.json", config_hash=content_hash
    )
    _write_meta(cfg, "dispatch", content_hash)
    n_bad = len(year.infeasible_hours)
    print(f"dispatch: {HOURS_PER_YEAR - n_bad} feasible hours, {n_bad} infeasible")
    return EXIT_INFEASIBLE if n_bad else EXIT_OK


def cmd_screen(cfg: StudyConfig) -> int:
    out = Path(cfg.out_dir)
    if not _stage_fresh(cfg, "dispatch", cfg.content_hash("dispatch"), DISPATCH_FILES):
        raise ConfigError(
            "dispatch output missing or stale for this config; "
            "run the dispatch stage first"
        )
    model, profile, _ = _load_study(cfg)
    calendar = cfg.calendar()
    year = _read_dispatch_outputs(cfg, model, profile)
    monitored = filter_monitored_lines(model, cfg.voltage_levels)

    system = dcflow.build_system(model)
    rec1, base = screening.stage1_scan(
        year, model, system, profile, calendar,
        monitored=monitored, near_pct=cfg.near_pct, overload_pct=cfg.overload_pct,
    )
    ptdf = shift_factors.compute_ptdf(system, model)
    lodf = shift_factors.compute_lodf(ptdf, model)
    stage2_monitored = monitored
    if cfg.screen_from_stage1:
        stage2_monitored = {r.line_id for r in rec1}
    rec2 = []
    if stage2_monitored:
        rec2 = screening.stage2_scan(
            base, lodf, model, calendar,
            monitored=stage2_monitored,
            near_pct=cfg.near_pct, overload_pct=cfg.overload_pct,
        )
    records = sorted(
        rec1 + rec2, key=lambda r: (r.hour, r.contingency or "", r.line_id)
    )
    summaries, regional = screening.summarize(records, model)
    screening.write_workbook(records, summaries, regional, out)
    _write_meta(cfg, "screen", cfg.content_hash("screen"))
    print(f"screen: {len(records)} records on {len(summaries)} lines")
    for region in sorted(regional):
        print(f"  {region}: {regional[region]} overloaded lines")
    return EXIT_OK


def cmd_site_pfc(cfg: StudyConfig) -> int:
    out = Path(cfg.out_dir)
    if not _stage_fresh(cfg, "screen", cfg.content_hash("screen"), SCREEN_FILES):
        raise ConfigError(
            "screening output missing or stale for this config; "
            "run the screen stage first"
        )
    model, profile, _ = _load_study(cfg)
    calendar = cfg.calendar()
    year = _read_dispatch_outputs(cfg, model, profile)
    records = screening.read_overloads_csv(out / "overloads.csv")
    summaries, _ = screening.summarize(records, model)

    system = dcflow.build_system(model)
    ptdf = shift_factors.compute_ptdf(system, model)
    lodf = shift_factors.compute_lodf(ptdf, model)
    injections = dispatch.injection_matrix(model, year, profile)

    targets = sorted({r.line_id for r in records if r.category == "overload"})
    outcomes = [
        siting.assess_target(
            target, records, model, injections, calendar, ptdf, lodf,
            cap_pct=cfg.pfc_cap_pct, tol_pp=cfg.bisection_tol_pp,
            overload_pct=cfg.overload_pct,
        )
        for target in targets
    ]
    ranking = siting.rank_targets(outcomes, summaries)
    siting.write_outcomes(outcomes, out / "pfc_outcomes.csv")
    siting.write_ranking(ranking, out / "pfc_ranking.csv")
    siting.write_outcomes_json(outcomes, out / "pfc_outcomes_detail.json")
    _write_meta(cfg, "siting", cfg.content_hash("siting"))

    _emit_report(cfg, model, records, summaries, outcomes, ranking, cfg.content_hash())
    for o in outcomes:
        print(f"site-pfc: {o.target_line} -> {o.classification}")
    if not outcomes:
        print("site-pfc: no overloaded lines to assess")
    return EXIT_OK


def _emit_report(cfg, model, records, summaries, outcomes, ranking, content_hash):
    out = Path(cfg.out_dir)
    dispatch_stats = {}
    summary_path = out / "dispatch_summary.json"
    if summary_path.exists():
        payload = json.loads(summary_path.read_text())
        dispatch_stats = {
            "infeasible_hours": len(payload["infeasible_hours"]),
            "total_curtailment_mwh": payload["total_curtailment_mwh"],
        }
    study = report.build_report(
        summaries,
        outcomes,
        model,
        parameters=cfg.parameter_echo(),
        records=records,
        ranking=ranking,
        dispatch_stats=dispatch_stats,
        scenario=cfg.scenario,
        config_hash=content_hash,
    )
    extra = [
        str(out / f)
        for f in DISPATCH_FILES + SCREEN_FILES + SITING_FILES
        if (out / f).exists()
    ]
    report.emit(study, out, extra_files=extra)


def cmd_report(cfg: StudyConfig) -> int:
    out = Path(cfg.out_dir)
    if not _stage_fresh(cfg, "siting", cfg.content_hash("siting"), SITING_FILES):
        raise ConfigError(
            "siting output missing or stale for this config; "
            "run the site-pfc stage first"
        )
    model, _, _ = _load_study(cfg)
    records = screening.read_overloads_csv(out / "overloads.csv")
    summaries, _ = screening.summarize(records, model)
    outcomes = siting.read_outcomes_json(out / "pfc_outcomes_detail.json")
    ranking = siting.rank_targets(outcomes, summaries)
    _emit_report(cfg, model, records, summaries, outcomes, ranking, cfg.content_hash())
    print(f"report: written to {out / 'report'}")
    return EXIT_OK


def cmd_run_all(cfg: StudyConfig) -> int:
    code = cmd_dispatch(cfg)
    if code not in (EXIT_OK, EXIT_INFEASIBLE):
        return code
    screen_code = cmd_screen(cfg)
    if screen_code != EXIT_OK:
        return screen_code
    siting_code = cmd_site_pfc(cfg)
    if siting_code != EXIT_OK:
        return siting_code
    return code


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(
            cfg,
            out_dir=args.out,
            workers=args.workers,
            voltage_levels=args.voltage_levels,
            pfc_cap_pct=args.pfc_cap,
            screen_from_stage1=args.screen_from_stage1,
        )
        handler = {
            "dispatch": cmd_dispatch,
            "screen": cmd_screen,
            "site-pfc": cmd_site_pfc,
            "report": cmd_report,
            "run-all": cmd_run_all,
        }[args.command]
        return handler(cfg)
    except (ConfigError, NetworkDataError, dispatch.DispatchInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (dcflow.SingularSystemError, dcflow.IslandingError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except report.ReportConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        raise


if __name__ == "__main__":
    sys.exit(main())
