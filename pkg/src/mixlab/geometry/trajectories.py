"""Flows built from the chain's own trajectories of length t = 2 tau.

Each pair (x, y) routes its unit of flow over the length-t trajectories from x
to y in proportion to their probability. When P^t(x, y) >= pi(y)/8 for all
pairs, the resulting congestion is at most 8t = 16 tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..chain import Chain
from ..errors import KLViolation, TooLarge
from .paths import FractionalFlow

KL_FLOOR = 1 / 8
MATERIALIZE_MAX_STATES = 12
MATERIALIZE_MAX_T = 6


@dataclass(frozen=True)
class TrajectoryFlow:
    t: int
    R: float  # trajectory edge loads, counted before loop erasure
    R_bar: float  # t * R: every trajectory has at most t moves
    ell: int
    witness: tuple
    kl_min: float  # min over pairs of P^t(x, y) / pi(y)
    flow: FractionalFlow | None  # explicit loop-erased paths when materialized


def trajectory_loads(chain: Chain, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Expected edge traversals, weighted by pi(x)pi(y)/P^t(x,y), and the matrix P^t.

    load(u, v) = P(u, v) * sum_s [ (P^s)^T W (P^{t-1-s})^T ](u, v), where
    W(x, y) = pi(x)pi(y)/P^t(x, y) off the diagonal and 0 on it.
    """
    P = chain.dense
    pi = chain.pi_float
    n = chain.n_states
    powers = [np.eye(n)]
    for _ in range(t):
        powers.append(powers[-1] @ P)
    Pt = powers[t]
    with np.errstate(divide="ignore"):
        W = np.where(Pt > 0, np.outer(pi, pi) / Pt, 0.0)
    np.fill_diagonal(W, 0.0)
    acc = np.zeros((n, n))
    for s in range(t):
        acc += powers[s].T @ W @ powers[t - 1 - s].T
    load = P * acc
    np.fill_diagonal(load, 0.0)
    return load, Pt


def _erase_step(path: tuple, v: int) -> tuple:
    if v == path[-1]:
        return path  # holding step
    if v in path:
        return path[: path.index(v) + 1]
    return path + (v,)


def _materialize(chain: Chain, t: int, Pt_exact) -> FractionalFlow:
    """Exact loop-erased trajectory weights.

    Chronological loop erasure only depends on the erased prefix, so the walk
    is propagated as a distribution over erased paths instead of raw walks.
    """
    n = chain.n_states
    routes: dict = {}
    for x in range(n):
        layer = {(x,): Fraction(1)}
        for _ in range(t):
            nxt: dict = {}
            for path, p in layer.items():
                for v, q in chain.rows[path[-1]].items():
                    key = _erase_step(path, v)
                    nxt[key] = nxt.get(key, Fraction(0)) + p * q
            layer = nxt
        for path, p in layer.items():
            y = path[-1]
            if y != x:
                routes.setdefault((x, y), []).append((path, p / Pt_exact[x][y]))
    return FractionalFlow({pair: sorted(rs) for pair, rs in sorted(routes.items())})


def flow_from_trajectories(chain: Chain, tau: int, materialize: bool | None = None) -> TrajectoryFlow:
    """Trajectory flow at t = 2 tau with its congestion, after checking P^t(x,y)/pi(y) >= 1/8.

    ``materialize`` defaults to explicit paths whenever the instance is within
    the enumeration caps; asking for it beyond the caps raises TooLarge.
    """
    if tau < 1:
        raise ValueError("tau must be a positive integer")
    t = 2 * tau
    n = chain.n_states
    within = n <= MATERIALIZE_MAX_STATES and t <= MATERIALIZE_MAX_T
    if materialize and not within:
        raise TooLarge(
            f"explicit trajectories need N <= {MATERIALIZE_MAX_STATES} and t <= {MATERIALIZE_MAX_T}", n=n, t=t
        )
    if materialize is None:
        materialize = within

    load, Pt = trajectory_loads(chain, t)
    pi = chain.pi_float
    kl = Pt / pi[None, :]
    kl_min = float(kl.min())
    if kl_min < KL_FLOOR - 1e-12:
        x, y = np.unravel_index(int(np.argmin(kl)), kl.shape)
        raise KLViolation(
            f"P^{t}({x},{y})/pi({y}) = {kl_min} is below 1/8", x=int(x), y=int(y), ratio=kl_min, t=t
        )
    Q = pi[:, None] * chain.dense
    ratio = np.where(load > 0, load / np.where(Q > 0, Q, 1), 0.0)
    u, v = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    R = float(ratio[u, v])

    flow = None
    if materialize:
        Pt_exact = [[Fraction(0)] * n for _ in range(n)]
        for x in range(n):
            mu = [Fraction(0)] * n
            mu[x] = Fraction(1)
            for _ in range(t):
                nxt = [Fraction(0)] * n
                for a, m in enumerate(mu):
                    if m:
                        for b, q in chain.rows[a].items():
                            nxt[b] += m * q
                mu = nxt
            Pt_exact[x] = mu
        flow = _materialize(chain, t, Pt_exact)
    return TrajectoryFlow(t=t, R=R, R_bar=t * R, ell=t, witness=(int(u), int(v)), kl_min=kl_min, flow=flow)
