"""Conductance, canonical paths, flows and resistance."""

from .conductance import CheegerReport, cheeger_check, conductance_exact
from .paths import (
    CanonicalPathSet,
    CongestionReport,
    FractionalFlow,
    congestion_csv,
    congestion_gap_bounds,
    dump_flow,
    flow_congestion,
    loop_erase,
    parse_flow,
    parse_paths,
    path_congestion,
    random_path_set,
    shortest_path_set,
)
from .resistance import ResistanceResult, resistance_approx, resistance_exact, resistance_min
from .rounding import RoundingResult, round_flow
from .trajectories import TrajectoryFlow, flow_from_trajectories, trajectory_loads
