"""Randomized rounding of a fractional flow to one path per pair."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..chain import Chain
from .paths import CanonicalPathSet, CongestionReport, FractionalFlow, flow_congestion, loop_erase, path_congestion


@dataclass(frozen=True)
class RoundingResult:
    gamma: CanonicalPathSet
    report: CongestionReport
    Lambda: float  # max over pairs of pi(x)pi(y)
    Q_min: float
    bound_term: float  # R + (Lambda / Q_min) ln N for the input flow's R

    @property
    def rho(self):
        return self.report.rho


def round_flow(chain: Chain, flow: FractionalFlow, seed: int, R: float | None = None) -> RoundingResult:
    """Pick one path per pair with probability equal to its weight, independently.

    Pairs are visited in sorted order and each draws from one seeded generator,
    so a seed determines the result. Demands rescaled by Lambda only enter the
    reported bound term.
    """
    rng = np.random.default_rng(seed)
    paths = {}
    for pair in sorted(flow.routes):
        routes = flow.routes[pair]
        w = np.array([float(wt) for _, wt in routes])
        k = int(rng.choice(len(routes), p=w / w.sum())) if len(routes) > 1 else 0
        paths[pair] = loop_erase(routes[k][0])
    gamma = CanonicalPathSet(paths)
    report = path_congestion(chain, gamma)

    pi = chain.pi_float
    n = chain.n_states
    Lambda = max(pi[x] * pi[y] for x in range(n) for y in range(n) if x != y)
    Q_min = min(float(chain.Q(x, y)) for x, y in chain.edges())
    if R is None:
        R = float(flow_congestion(chain, flow).rho)
    return RoundingResult(gamma, report, Lambda, Q_min, R + Lambda / Q_min * math.log(n))
