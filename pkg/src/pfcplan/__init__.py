"""Transmission planning toolkit for siting series-reactance power flow
controllers: a year of hourly DC load flows, N-1 screening via shift factors,
and reactance-perturbation siting that classifies every overload as fully
resolved, partially resolved, or unresolvable.
"""

from .network import (
    Bus,
    DisconnectedNetworkError,
    Generator,
    HOURS_PER_YEAR,
    Line,
    NetworkDataError,
    NetworkModel,
    SeasonCalendar,
    effective_rating,
    filter_monitored_lines,
    load_network,
    save_network,
    seasonal_rating,
)
from .dispatch import (
    DemandProfile,
    DispatchHour,
    DispatchInputError,
    DispatchYear,
    ResAvailability,
    bus_injections,
    injection_matrix,
    merit_order_dispatch,
    run_year,
)
from .dcflow import (
    FlowSolution,
    IslandingError,
    SingularSystemError,
    SusceptanceSystem,
    build_system,
    solve_flows,
    solve_with_outage,
    susceptance_matrix,
)
from .shift_factors import (
    LodfMatrix,
    PtdfMatrix,
    compute_lodf,
    compute_ptdf,
    post_contingency_flows,
)
from .screening import (
    BaseFlows,
    LineSummary,
    OverloadRecord,
    stage1_scan,
    stage2_scan,
    summarize,
)
from .siting import (
    FULLY_RESOLVED,
    NO_CHANGE,
    PARTIALLY_RESOLVED,
    PfcCandidate,
    PfcOutcome,
    PfcRanking,
    assess_target,
    candidate_locations,
    check_side_effects,
    min_reactance_increase,
    rank_targets,
)

__version__ = "0.1.0"

__all__ = [
    "Bus",
    "Line",
    "Generator",
    "NetworkModel",
    "SeasonCalendar",
    "NetworkDataError",
    "DisconnectedNetworkError",
    "HOURS_PER_YEAR",
    "load_network",
    "save_network",
    "effective_rating",
    "seasonal_rating",
    "filter_monitored_lines",
    "DemandProfile",
    "ResAvailability",
    "DispatchHour",
    "DispatchYear",
    "DispatchInputError",
    "merit_order_dispatch",
    "run_year",
    "bus_injections",
    "injection_matrix",
    "SusceptanceSystem",
    "FlowSolution",
    "IslandingError",
    "SingularSystemError",
    "build_system",
    "solve_flows",
    "solve_with_outage",
    "susceptance_matrix",
    "PtdfMatrix",
    "LodfMatrix",
    "compute_ptdf",
    "compute_lodf",
    "post_contingency_flows",
    "OverloadRecord",
    "LineSummary",
    "BaseFlows",
    "stage1_scan",
    "stage2_scan",
    "summarize",
    "PfcCandidate",
    "PfcOutcome",
    "PfcRanking",
    "FULLY_RESOLVED",
    "PARTIALLY_RESOLVED",
    "NO_CHANGE",
    "candidate_locations",
    "min_reactance_increase",
    "check_side_effects",
    "assess_target",
    "rank_targets",
]
