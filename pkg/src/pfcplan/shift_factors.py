"""Topology-only sensitivity matrices for N-1 screening.

PTDF (generation shift factors): MW change on each line per MW injected at a
bus and withdrawn at the slack. LODF (line outage shift factors): fraction of
an outaged line's pre-contingency flow that lands on each other line. Both
depend only on topology, so they are computed once per topology and reused
across all 8,760 hourly operating points.

LODF(l, k) = phi(l, k) / (1 - phi(k, k)) where phi(m, k) is the PTDF of line m
for a unit transfer from k's from-bus to k's to-bus. A column with
phi(k, k) ~ 1 means the outage would island part of the network; it is marked
rather than filled with numbers. By convention LODF(k, k) = -1: a line's own
post-outage flow is zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dcflow import FlowSolution, IslandingError, SusceptanceSystem, islanded_buses
from .network import NetworkModel

# |1 - phi(k,k)| below this marks the outage as islanding (bridge line)
ISLANDING_TOL = 1e-9


@dataclass(frozen=True)
class PtdfMatrix:
    """Dense lines x buses matrix of slack-referenced injection factors."""

    matrix: np.ndarray
    line_ids: tuple[str, ...]
    bus_ids: tuple[str, ...]
    slack_bus: str

    def entry(self, line_id: str, bus_id: str) -> float:
        return float(
            self.matrix[self.line_ids.index(line_id), self.bus_ids.index(bus_id)]
        )


@dataclass(frozen=True)
class LodfMatrix:
    """Dense monitored-lines x outage-lines matrix with islanding marks.

    Columns flagged in ``islanding`` belong to bridge outages; their numeric
    entries are NaN and must not be used.
    """

    matrix: np.ndarray
    line_ids: tuple[str, ...]
    islanding: np.ndarray  # bool per outage column

    def entry(self, line_id: str, outage_id: str) -> float:
        k = self.line_ids.index(outage_id)
        if self.islanding[k]:
            raise IslandingError(outage_id, set())
        return float(self.matrix[self.line_ids.index(line_id), k])

    def is_islanding(self, outage_id: str) -> bool:
        return bool(self.islanding[self.line_ids.index(outage_id)])

    def non_islanding_outages(self) -> tuple[str, ...]:
        return tuple(
            lid for lid, isl in zip(self.line_ids, self.islanding) if not isl
        )


def compute_ptdf(system: SusceptanceSystem, model: NetworkModel) -> PtdfMatrix:
    """PTDF via one back substitution per non-slack bus against the shared LU."""
    n = system.n_buses
    # angle response to a unit injection at each non-slack bus
    rhs = np.eye(n - 1)
    theta_red = system.lu.solve(rhs)
    theta = np.zeros((n, n))
    theta[np.ix_(system.non_slack, system.non_slack)] = theta_red
    ptdf = system.susceptance[:, None] * (
        theta[system.from_idx, :] - theta[system.to_idx, :]
    )
    # exact zeros on the slack column, not just tiny residue
    ptdf[:, system.slack_index] = 0.0
    return PtdfMatrix(
        matrix=ptdf,
        line_ids=system.line_ids,
        bus_ids=tuple(b.id for b in model.buses),
        slack_bus=model.slack_bus,
    )


def line_transfer_factors(ptdf: PtdfMatrix, model: NetworkModel) -> np.ndarray:
    """phi[m, k]: flow on line m for a unit transfer across line k's terminals."""
    bus_pos = {bid: i for i, bid in enumerate(ptdf.bus_ids)}
    from_cols = np.array(
        [bus_pos[model.line_by_id[lid].from_bus] for lid in ptdf.line_ids]
    )
    to_cols = np.array(
        [bus_pos[model.line_by_id[lid].to_bus] for lid in ptdf.line_ids]
    )
    return ptdf.matrix[:, from_cols] - ptdf.matrix[:, to_cols]


def compute_lodf(ptdf: PtdfMatrix, model: NetworkModel) -> LodfMatrix:
    phi = line_transfer_factors(ptdf, model)
    self_factor = np.diag(phi)
    islanding = self_factor >= 1.0 - ISLANDING_TOL
    denom = 1.0 - self_factor
    safe = np.where(islanding, 1.0, denom)
    lodf = phi / safe[None, :]
    np.fill_diagonal(lodf, -1.0)
    lodf[:, islanding] = np.nan
    return LodfMatrix(matrix=lodf, line_ids=ptdf.line_ids, islanding=islanding)


def post_contingency_flows(
    base: FlowSolution, lodf: LodfMatrix, outage_line: str
) -> np.ndarray:
    """MW line flows after an outage, from base flows and the LODF column.

    flow'(l) = flow(l) + LODF(l, k) * flow(k); the outaged line itself carries
    zero. Islanding-marked outages are refused.
    """
    if base.line_ids != lodf.line_ids:
        raise ValueError("base solution and LODF cover different line sets")
    k = lodf.line_ids.index(outage_line)
    if lodf.islanding[k]:
        raise IslandingError(outage_line, set())
    flows = base.flows_mw + lodf.matrix[:, k] * base.flows_mw[k]
    flows[k] = 0.0
    return flows


def islanding_lines(lodf: LodfMatrix) -> set[str]:
    """Outages the LODF marks as islanding (should equal the graph bridges)."""
    return {lid for lid, isl in zip(lodf.line_ids, lodf.islanding) if isl}


def verify_islanding_marks(lodf: LodfMatrix, model: NetworkModel) -> bool:
    """Cross-check islanding marks against graph traversal per outage."""
    for lid, marked in zip(lodf.line_ids, lodf.islanding):
        actually_islands = bool(islanded_buses(model, lid))
        if marked != actually_islands:
            return False
    return True


def export_ptdf_csv(ptdf: PtdfMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "bus", "factor"])
        for i, lid in enumerate(ptdf.line_ids):
            for j, bid in enumerate(ptdf.bus_ids):
                writer.writerow([lid, bid, repr(float(ptdf.matrix[i, j]))])


def export_lodf_csv(lodf: LodfMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "outage", "factor"])
        for i, lid in enumerate(lodf.line_ids):
            for k, oid in enumerate(lodf.line_ids):
                value = "islanding" if lodf.islanding[k] else repr(float(lodf.matrix[i, k]))
                writer.writerow([lid, oid, value])
