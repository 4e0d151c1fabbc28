"""Exact mixing-time analysis for finite reversible Markov chains."""

from .chain import (
    Chain,
    build_chain,
    check_reversibility,
    distance_from_stationarity,
    exact_mixing_time,
    lazify,
    mixing_times,
    parse_chain_text,
    power_distribution,
    read_chain_file,
    variation_distance,
)
from .spectral import Spectrum, eigen_spectrum, gap_mixing_bounds, variational_quotient

__version__ = "0.1.0"
