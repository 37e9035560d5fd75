"""Stage 3: size and place series-reactance increases to relieve overloads.

A power flow controller is modeled as a reactance increase of up to a cap
(default 40%) on one hosting line, diverting flow onto parallel paths. For
every target line with overload records, candidate hosting lines are ordered
by flow sensitivity, the smallest sufficient increase is found by bisection
against exact re-solves, and every other line is checked for new or worsened
loadings. Outcomes fall into three classes:

* FullyResolved: one candidate and one fixed increase clear every overloaded
  (hour, contingency) pair with no line left above its effective rating.
* NoChange: the target flow is insensitive to any reactance increase (no
  parallel path under the relevant contingencies).
* PartiallyResolved: everything else, including side-effect interactions and
  overloads the capped increase cannot clear.

All Stage-3 evaluations are exact re-solves on the perturbed topology; the
screening shift factors are never reused here because a reactance change
invalidates them. Hours with identical injections, season, and contingency are
solved once and shared.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import dcflow
from .network import NetworkModel, SeasonCalendar, effective_rating
from .screening import OverloadRecord, LineSummary
from .shift_factors import LodfMatrix, PtdfMatrix, line_transfer_factors

FULLY_RESOLVED = "FullyResolved"
PARTIALLY_RESOLVED = "PartiallyResolved"
NO_CHANGE = "NoChange"

CAP_PCT_DEFAULT = 40.0
BISECTION_TOL_PP = 0.1
SENSITIVITY_TOL = 1e-6
# MW change below this between zero and cap counts as "insensitive"
INSENSITIVE_MW = 1e-9


@dataclass(frozen=True)
class PfcCandidate:
    """A hosting line proposal for relieving one target line."""

    target_line: str
    pfc_line: str
    score: float  # expected relief per unit fractional reactance increase
    increase_pct: float | None = None


@dataclass(frozen=True)
class SideEffect:
    line_id: str
    loading_pct: float
    pre_loading_pct: float


@dataclass(frozen=True)
class PfcOutcome:
    target_line: str
    classification: str
    pfc_line: str | None
    delta_pct: float | None
    overload_hours: int
    resolved_hours: int
    residual_max_loading_pct: float
    side_effect_lines: tuple[str, ...]

    @property
    def resolved_fraction(self) -> float:
        if self.overload_hours == 0:
            return 0.0
        return self.resolved_hours / self.overload_hours


@dataclass(frozen=True)
class RankEntry:
    rank: int
    target_line: str
    classification: str
    overload_hours: int
    resolved_fraction: float
    delta_pct: float | None


@dataclass(frozen=True)
class PfcRanking:
    entries: tuple[RankEntry, ...]


def candidate_locations(
    target: str,
    lodf: LodfMatrix,
    ptdf: PtdfMatrix,
    model: NetworkModel,
    contingency: str | None = None,
    min_score: float = SENSITIVITY_TOL,
) -> list[PfcCandidate]:
    """Hosting lines ordered by expected relief of the target per unit increase.

    Sensitivities are evaluated on the post-contingency topology when a
    contingency is given (via the outage compensation of the transfer
    factors). A target that is a bridge under the relevant contingency has no
    parallel path, so the list is empty: nothing can move its flow.
    """
    line_ids = ptdf.line_ids
    if target not in line_ids:
        raise ValueError(f"target {target} is not an in-service line")
    if contingency == target:
        raise ValueError("target cannot be its own contingency")
    t = line_ids.index(target)
    phi = line_transfer_factors(ptdf, model)

    if contingency is None:
        phi_t = phi[t, :].copy()
    else:
        k = line_ids.index(contingency)
        if lodf.islanding[k]:
            raise dcflow.IslandingError(contingency, set())
        phi_t = phi[t, :] + lodf.matrix[t, k] * phi[k, :]

    self_factor = float(phi_t[t])
    if self_factor >= 1.0 - min_score:
        return []  # bridge under the relevant contingency

    scored = [(1.0 - self_factor, target)]
    for c, lid in enumerate(line_ids):
        if lid == target or lid == contingency:
            continue
        coupling = abs(float(phi_t[c]))
        if coupling > min_score:
            scored.append((coupling, lid))
    # strongest coupling first; the target itself wins ties
    scored.sort(key=lambda sc: (-sc[0], sc[1] != target, sc[1]))
    return [PfcCandidate(target_line=target, pfc_line=lid, score=s) for s, lid in scored]


def _solve_case(
    model: NetworkModel,
    injections: np.ndarray,
    contingency: str | None,
    pfc_line: str | None = None,
    delta_pct: float = 0.0,
) -> dcflow.FlowSolution:
    scale = None
    if pfc_line is not None and delta_pct != 0.0:
        scale = {pfc_line: 1.0 + delta_pct / 100.0}
    if contingency is None:
        system = dcflow.build_system(model, reactance_scale=scale)
        return dcflow.solve_flows(system, injections)
    return dcflow.solve_with_outage(model, injections, contingency, reactance_scale=scale)


def _size_increase(
    model: NetworkModel,
    injections: np.ndarray,
    contingency: str | None,
    candidate: PfcCandidate,
    rating_mw: float,
    cap_pct: float,
    tol_pp: float,
) -> tuple[float | None, float, float]:
    """(minimal delta or None, |flow| at zero, |flow| at cap) for the target."""
    target = candidate.target_line

    def target_flow(delta: float) -> float:
        sol = _solve_case(model, injections, contingency, candidate.pfc_line, delta)
        return abs(sol.flow_of(target))

    f_zero = target_flow(0.0)
    f_cap = target_flow(cap_pct)
    if f_zero <= rating_mw:
        return 0.0, f_zero, f_cap
    if f_cap > rating_mw:
        return None, f_zero, f_cap
    lo, hi = 0.0, cap_pct
    while hi - lo > tol_pp:
        mid = 0.5 * (lo + hi)
        if target_flow(mid) <= rating_mw:
            hi = mid
        else:
            lo = mid
    return hi, f_zero, f_cap


def min_reactance_increase(
    model: NetworkModel,
    injections: np.ndarray,
    contingency: str | None,
    candidate: PfcCandidate,
    rating_mw: float,
    cap_pct: float = CAP_PCT_DEFAULT,
    tol_pp: float = BISECTION_TOL_PP,
) -> float | None:
    """Smallest reactance increase (percent) that brings the target's flow
    within the rating, by bisection against exact re-solves.

    Returns 0.0 when no increase is needed and None when even the cap fails.
    The returned value satisfies the rating while a value one tolerance step
    lower does not.
    """
    if candidate.pfc_line == contingency:
        raise ValueError("PFC cannot be hosted on the contingency line")
    delta, _, _ = _size_increase(
        model, injections, contingency, candidate, rating_mw, cap_pct, tol_pp
    )
    return delta


def check_side_effects(
    model: NetworkModel,
    pfc_line: str,
    delta_pct: float,
    injections: np.ndarray,
    contingency: str | None,
    hour: int,
    calendar: SeasonCalendar,
    overload_pct: float = 100.0,
) -> list[SideEffect]:
    """Lines pushed above their effective rating, or made worse while already
    above it, by the reactance increase. Exact re-solves of both states."""
    pre = _solve_case(model, injections, contingency)
    post = _solve_case(model, injections, contingency, pfc_line, delta_pct)
    effects = []
    for i, lid in enumerate(post.line_ids):
        rating = effective_rating(model.line_by_id[lid], hour, calendar)
        post_pct = 100.0 * abs(post.flows_mw[i]) / rating
        pre_pct = 100.0 * abs(pre.flows_mw[i]) / rating
        if post_pct > overload_pct and post_pct > pre_pct + 1e-9:
            effects.append(
                SideEffect(line_id=lid, loading_pct=post_pct, pre_loading_pct=pre_pct)
            )
    return effects


@dataclass
class _PairGroup:
    """Overloaded (hour, contingency) pairs that share one exact solve."""

    contingency: str | None
    rep_hour: int
    hours: list[int]


def _group_pairs(
    pairs: set[tuple[int, str | None]],
    injections: np.ndarray,
    calendar: SeasonCalendar,
) -> list[_PairGroup]:
    groups: dict[tuple, _PairGroup] = {}
    for hour, contingency in sorted(pairs, key=lambda p: (p[0], p[1] or "")):
        key = (contingency, calendar.season(hour), injections[hour].tobytes())
        if key not in groups:
            groups[key] = _PairGroup(contingency=contingency, rep_hour=hour, hours=[])
        groups[key].hours.append(hour)
    return list(groups.values())


def assess_target(
    target: str,
    records: list[OverloadRecord],
    model: NetworkModel,
    injections: np.ndarray,
    calendar: SeasonCalendar,
    ptdf: PtdfMatrix,
    lodf: LodfMatrix,
    cap_pct: float = CAP_PCT_DEFAULT,
    tol_pp: float = BISECTION_TOL_PP,
    overload_pct: float = 100.0,
    max_candidates: int = 8,
) -> PfcOutcome:
    """Classify one overloaded target line and size the best single device.

    One device and one fixed increase must serve the whole year. A covered
    (hour, contingency) pair counts as resolved when, at the chosen setting,
    no line anywhere is above its effective rating; an hour is resolved when
    all its pairs are. Candidates are tried in relief order until one resolves
    everything; otherwise the candidate resolving the most hours is reported.

    Only the ``max_candidates`` best-coupled hosting lines are sized (pass 0
    for no limit); weaker couplings cannot beat a stronger one that already
    failed, so this bounds the exact re-solve work on large meshes.
    """
    pairs = {
        (r.hour, r.contingency)
        for r in records
        if r.line_id == target and r.category == "overload"
    }
    if not pairs:
        raise ValueError(f"no overload records for target {target}")
    all_hours = sorted({h for h, _ in pairs})
    total_hours = len(all_hours)
    pre_max_loading = max(
        r.loading_pct
        for r in records
        if r.line_id == target and r.category == "overload"
    )

    groups = _group_pairs(pairs, injections, calendar)
    contingencies = sorted({g.contingency for g in groups}, key=lambda c: c or "")

    # union of per-contingency candidate lists, keeping the best score each
    best_score: dict[str, float] = {}
    for contingency in contingencies:
        for cand in candidate_locations(target, lodf, ptdf, model, contingency):
            if cand.pfc_line not in best_score or cand.score > best_score[cand.pfc_line]:
                best_score[cand.pfc_line] = cand.score
    candidates = [
        PfcCandidate(target_line=target, pfc_line=lid, score=s)
        for lid, s in sorted(
            best_score.items(), key=lambda kv: (-kv[1], kv[0] != target, kv[0])
        )
    ]
    if max_candidates:
        candidates = candidates[:max_candidates]

    if not candidates:
        return PfcOutcome(
            target_line=target,
            classification=NO_CHANGE,
            pfc_line=None,
            delta_pct=None,
            overload_hours=total_hours,
            resolved_hours=0,
            residual_max_loading_pct=pre_max_loading,
            side_effect_lines=(),
        )

    best = None  # (clean_hours, cleared_hours, order, candidate fields...)
    any_sensitive = False
    for order, cand in enumerate(candidates):
        deltas: list[float | None] = []
        sensitive = False
        for g in groups:
            if cand.pfc_line == g.contingency:
                deltas.append(None)
                continue
            rating = effective_rating(
                model.line_by_id[target], g.rep_hour, calendar
            )
            delta, f_zero, f_cap = _size_increase(
                model, injections[g.rep_hour], g.contingency, cand, rating,
                cap_pct, tol_pp,
            )
            deltas.append(delta)
            if abs(f_zero - f_cap) > INSENSITIVE_MW:
                sensitive = True
        any_sensitive = any_sensitive or sensitive
        clearable = [d for d in deltas if d is not None]
        if not clearable:
            continue
        delta_star = max(clearable)

        hour_clean = {h: True for h in all_hours}
        hour_cleared = {h: True for h in all_hours}
        effects: list[SideEffect] = []
        residual = 0.0
        for g, delta_g in zip(groups, deltas):
            sol = _solve_case(
                model, injections[g.rep_hour], g.contingency, cand.pfc_line, delta_star
            )
            ratings = np.array(
                [
                    effective_rating(model.line_by_id[lid], g.rep_hour, calendar)
                    for lid in sol.line_ids
                ]
            )
            loadings = 100.0 * np.abs(sol.flows_mw) / ratings
            residual = max(residual, float(loadings.max()))
            target_ok = delta_g is not None and delta_g <= delta_star
            if not target_ok or float(loadings.max()) > overload_pct:
                for h in g.hours:
                    hour_clean[h] = False
            if not target_ok:
                for h in g.hours:
                    hour_cleared[h] = False
            effects.extend(
                check_side_effects(
                    model, cand.pfc_line, delta_star, injections[g.rep_hour],
                    g.contingency, g.rep_hour, calendar, overload_pct,
                )
            )
        n_clean = sum(hour_clean.values())
        n_cleared = sum(hour_cleared.values())
        entry = (
            n_clean,
            n_cleared,
            -order,
            cand.pfc_line,
            delta_star,
            tuple(sorted({e.line_id for e in effects})),
            residual,
        )
        if best is None or entry[:3] > best[:3]:
            best = entry
        if n_clean == total_hours:
            break  # first candidate that fully resolves wins

    if best is None:
        classification = NO_CHANGE if not any_sensitive else PARTIALLY_RESOLVED
        return PfcOutcome(
            target_line=target,
            classification=classification,
            pfc_line=None,
            delta_pct=None,
            overload_hours=total_hours,
            resolved_hours=0,
            residual_max_loading_pct=pre_max_loading,
            side_effect_lines=(),
        )

    clean, _cleared, _order, pfc_line, delta_star, effect_lines, residual = best
    classification = FULLY_RESOLVED if clean == total_hours else PARTIALLY_RESOLVED
    return PfcOutcome(
        target_line=target,
        classification=classification,
        pfc_line=pfc_line,
        delta_pct=delta_star,
        overload_hours=total_hours,
        resolved_hours=clean,
        residual_max_loading_pct=residual,
        side_effect_lines=effect_lines,
    )


_CLASS_ORDER = {FULLY_RESOLVED: 0, PARTIALLY_RESOLVED: 1, NO_CHANGE: 2}


def rank_targets(
    outcomes: list[PfcOutcome], summaries: list[LineSummary] | None = None
) -> PfcRanking:
    """Deterministic deployment ranking.

    Sort key: classification (fully < partially < no change), then more
    overloaded hours, then larger resolved fraction, then smaller increase,
    then line id. Summaries may refine the overload-hour counts when provided.
    """
    hours_by_line = {}
    if summaries:
        hours_by_line = {s.line_id: s.overload_hours for s in summaries}

    def hours_of(o: PfcOutcome) -> int:
        return hours_by_line.get(o.target_line, o.overload_hours)

    ordered = sorted(
        outcomes,
        key=lambda o: (
            _CLASS_ORDER[o.classification],
            -hours_of(o),
            -o.resolved_fraction,
            o.delta_pct if o.delta_pct is not None else float("inf"),
            o.target_line,
        ),
    )
    entries = tuple(
        RankEntry(
            rank=i + 1,
            target_line=o.target_line,
            classification=o.classification,
            overload_hours=hours_of(o),
            resolved_fraction=o.resolved_fraction,
            delta_pct=o.delta_pct,
        )
        for i, o in enumerate(ordered)
    )
    return PfcRanking(entries=entries)


def write_outcomes(outcomes: list[PfcOutcome], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "target_line",
                "classification",
                "pfc_line",
                "delta_pct",
                "overload_hours",
                "resolved_hours",
                "residual_max_loading_pct",
            ]
        )
        for o in sorted(outcomes, key=lambda o: o.target_line):
            writer.writerow(
                [
                    o.target_line,
                    o.classification,
                    o.pfc_line or "",
                    "" if o.delta_pct is None else repr(o.delta_pct),
                    o.overload_hours,
                    o.resolved_hours,
                    repr(o.residual_max_loading_pct),
                ]
            )


def write_outcomes_json(outcomes: list[PfcOutcome], path) -> None:
    """Full outcome detail (side effects included) for report re-emission."""
    import json

    payload = [
        {
            "target_line": o.target_line,
            "classification": o.classification,
            "pfc_line": o.pfc_line,
            "delta_pct": o.delta_pct,
            "overload_hours": o.overload_hours,
            "resolved_hours": o.resolved_hours,
            "residual_max_loading_pct": o.residual_max_loading_pct,
            "side_effect_lines": list(o.side_effect_lines),
        }
        for o in sorted(outcomes, key=lambda o: o.target_line)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_outcomes_json(path) -> list[PfcOutcome]:
    import json

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        PfcOutcome(
            target_line=row["target_line"],
            classification=row["classification"],
            pfc_line=row["pfc_line"],
            delta_pct=row["delta_pct"],
            overload_hours=row["overload_hours"],
            resolved_hours=row["resolved_hours"],
            residual_max_loading_pct=row["residual_max_loading_pct"],
            side_effect_lines=tuple(row["side_effect_lines"]),
        )
        for row in payload
    ]


def write_ranking(ranking: PfcRanking, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "rank",
                "target_line",
                "classification",
                "overload_hours",
                "resolved_fraction",
                "delta_pct",
            ]
        )
        for e in ranking.entries:
            writer.writerow(
                [
                    e.rank,
                    e.target_line,
                    e.classification,
                    e.overload_hours,
                    repr(e.resolved_fraction),
                    "" if e.delta_pct is None else repr(e.delta_pct),
                ]
            )
