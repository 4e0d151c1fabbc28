"""Couplings, path coupling, coalescence simulation and the layer analysis for matchings."""

from .builtin import builtin_coupling, builtin_metric, js_shared_coupling
from .path_coupling import (
    PathCouplingSpec,
    contraction_factor,
    extend_along_path,
    path_coupling_bound,
    path_coupling_tau,
)
from .strategy import (
    CouplingStrategy,
    FaithfulReport,
    expected_one_step_distance,
    independent_coupling,
    verify_faithful,
)
from .kr import LayerReport, kr_layer_drift, pair_class, submartingale_bound
from .simulate import CoalescenceCurve, simulate_coalescence, trial_stream
