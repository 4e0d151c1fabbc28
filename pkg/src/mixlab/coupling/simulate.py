"""Monte Carlo coalescence of a coupling, one counter-based stream per trial."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .strategy import CouplingStrategy

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class CoalescenceCurve:
    t: np.ndarray  # 0..t_max
    frac_uncoupled: np.ndarray
    halfwidth: np.ndarray  # 99% normal-approximation half-width
    trials: int

    @property
    def sigma(self) -> np.ndarray:
        p = self.frac_uncoupled
        return np.sqrt(p * (1 - p) / self.trials)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t,frac_uncoupled,halfwidth\n")
        for t, p, h in zip(self.t, self.frac_uncoupled, self.halfwidth):
            out.write(f"{int(t)},{p:.10g},{h:.10g}\n")
        return out.getvalue()


def trial_stream(seed: int, j: int) -> np.random.Generator:
    """Philox generator for trial j: the key packs (seed, j) into 128 bits."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(j)))


class _Sampler:
    """Joint laws as (outcome arrays, cumulative probabilities), built on first use."""

    def __init__(self, cs: CouplingStrategy):
        self.cs = cs
        self.n = cs.chain.n_states
        self._tables: dict = {}

    def table(self, x: int, y: int):
        key = (x, y)
        tab = self._tables.get(key)
        if tab is None:
            items = sorted(self.cs.joint_law(x, y).items())
            xs = np.array([a for (a, _), _ in items], dtype=np.int64)
            ys = np.array([b for (_, b), _ in items], dtype=np.int64)
            cdf = np.cumsum([float(p) for _, p in items])
            cdf[-1] = 1.0
            tab = (xs, ys, cdf)
            self._tables[key] = tab
        return tab


def simulate_coalescence(cs: CouplingStrategy, x0: int, y0, t_max: int, trials: int, seed: int) -> CoalescenceCurve:
    """Empirical Pr[X_t != Y_t] for t = 0..t_max over independent joint runs.

    ``y0`` is a state index, or the string ``"pi"`` to draw Y_0 from the
    stationary distribution (using the trial's own stream). Trials are
    advanced together, grouped by current pair; the uniforms of trial j come
    only from stream (seed, j), so the result does not depend on grouping.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    sampler = _Sampler(cs)
    n = sampler.n
    # each trial needs one uniform per step plus one for a stationary start
    U = np.empty((trials, t_max + 1))
    for j in range(trials):
        U[j] = trial_stream(seed, j).random(t_max + 1)
    X = np.full(trials, x0, dtype=np.int64)
    if isinstance(y0, str):
        if y0 != "pi":
            raise ValueError("y0 must be a state index or 'pi'")
        cdf = np.cumsum(cs.chain.pi_float)
        cdf[-1] = 1.0
        Y = np.searchsorted(cdf, U[:, 0], side="right").astype(np.int64)
    else:
        Y = np.full(trials, int(y0), dtype=np.int64)

    frac = np.empty(t_max + 1)
    frac[0] = np.mean(X != Y)
    for t in range(1, t_max + 1):
        u = U[:, t]
        pair = X * n + Y
        for key in np.unique(pair):
            sel = pair == key
            x, y = divmod(int(key), n)
            xs, ys, cdf = sampler.table(x, y)
            k = np.searchsorted(cdf, u[sel], side="right")
            np.minimum(k, len(cdf) - 1, out=k)
            X[sel], Y[sel] = xs[k], ys[k]
        frac[t] = np.mean(X != Y)
    half = Z99 * np.sqrt(frac * (1 - frac) / trials)
    return CoalescenceCurve(np.arange(t_max + 1), frac, half, trials)
