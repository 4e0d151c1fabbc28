"""Path coupling: a coupling on adjacent pairs, a shortest-path metric, and its extension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..errors import NoContraction, NoGeodesic
from .strategy import CouplingStrategy, expected_one_step_distance


@dataclass
class PathCouplingSpec:
    """Adjacency S with integer weights, the induced metric and the coupling on S."""

    coupling: CouplingStrategy
    adjacency: dict  # (x, y) -> positive integer weight, stored in both orientations
    metric: np.ndarray  # all-pairs shortest-path distances (int64)
    _neighbors: list = field(default_factory=list, repr=False)
    _extended: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, coupling: CouplingStrategy, adjacency: dict) -> "PathCouplingSpec":
        n = coupling.chain.n_states
        adj = {}
        for (x, y), w in adjacency.items():
            if x == y or w <= 0 or int(w) != w:
                raise ValueError(f"adjacency weight for ({x}, {y}) must be a positive integer")
            adj[(x, y)] = adj[(y, x)] = int(w)
        rows, cols = zip(*adj) if adj else ((), ())
        g = csr_matrix(([adj[e] for e in zip(rows, cols)], (rows, cols)), shape=(n, n))
        dist = shortest_path(g, directed=False, unweighted=False)
        if np.isinf(dist).any():
            x, y = (int(v) for v in np.argwhere(np.isinf(dist))[0])
            raise NoGeodesic(f"states {x} and {y} are not connected by adjacent pairs", x=x, y=y)
        nbrs = [[] for _ in range(n)]
        for x, y in sorted(adj):
            nbrs[x].append(y)
        return cls(coupling, adj, np.rint(dist).astype(np.int64), nbrs)

    @property
    def chain(self):
        return self.coupling.chain

    @property
    def diameter(self) -> int:
        return int(self.metric.max())

    def delta(self, x: int, y: int) -> int:
        return int(self.metric[x, y])

    def geodesic(self, x: int, y: int) -> tuple:
        """Lexicographically smallest shortest path from x to y through adjacent pairs."""
        path = [x]
        cur = x
        while cur != y:
            for z in self._neighbors[cur]:
                if self.adjacency[(cur, z)] + self.metric[z, y] == self.metric[cur, y]:
                    path.append(z)
                    cur = z
                    break
            else:
                raise NoGeodesic(f"no geodesic step from {cur} towards {y}", x=x, y=y)
        return tuple(path)

    def extend(self, x: int, y: int) -> dict:
        return extend_along_path(self, x, y)

    def as_strategy(self) -> CouplingStrategy:
        """The coupling on all pairs obtained by composing along geodesics."""
        ch = self.chain

        def randomness(x, y):
            return sorted(self.extend(x, y).items())

        return CouplingStrategy(ch, lambda x, y, tok: tok, randomness, name=f"{self.coupling.name}+paths")


def extend_along_path(pcs: PathCouplingSpec, x: int, y: int) -> dict:
    """Joint law of (x', y') from chaining the adjacent couplings along the geodesic.

    Z'_0 ~ P(x, .); each Z'_{l+1} is drawn from the coupling of (Z_l, Z_{l+1})
    conditioned on Z'_l, and the law of (Z'_0, Z'_r) is returned.
    """
    key = (x, y)
    if key in pcs._extended:
        return pcs._extended[key]
    ch = pcs.chain
    if x == y:
        law = {(a, a): p for a, p in ch.rows[x].items()}
    else:
        path = pcs.geodesic(x, y)
        law = {(a, a): p for a, p in ch.rows[x].items()}
        for u, v in zip(path, path[1:]):
            link = pcs.coupling.joint_law(u, v)
            given: dict = {}
            for (a, b), p in link.items():
                given.setdefault(a, []).append((b, p))
            nxt: dict = {}
            for (a, b), p in law.items():
                pb = ch.rows[u][b]
                for c, q in given[b]:
                    key2 = (a, c)
                    nxt[key2] = nxt.get(key2, Fraction(0)) + p * q / pb
            law = nxt
    pcs._extended[key] = law
    return law


def contraction_factor(pcs: PathCouplingSpec) -> tuple[Fraction, tuple]:
    """beta = max over adjacent (x, y) of E[delta(x', y')] / delta(x, y), with the arg-max pair.

    A single-state chain has no adjacent pairs; its factor is 0 with no witness.
    """
    metric = pcs.metric
    best, witness = Fraction(0), None
    for x, y in sorted(pcs.adjacency):
        e = expected_one_step_distance(pcs.coupling, x, y, lambda a, b: int(metric[a, b]))
        r = e / int(metric[x, y])
        if witness is None or r > best:
            best, witness = r, (x, y)
    return best, witness


def path_coupling_tau(beta, D: int, eps) -> int:
    """ceil(ln(D / eps) / (1 - beta)); beta >= 1 raises NoContraction."""
    if beta >= 1:
        raise NoContraction(f"contraction factor {beta} is not below 1", beta=str(beta))
    return math.ceil(math.log(D / float(eps)) / float(1 - Fraction(beta)))


def path_coupling_bound(pcs: PathCouplingSpec, eps) -> int:
    beta, _ = contraction_factor(pcs)
    if pcs.diameter == 0:
        return 0
    return path_coupling_tau(beta, pcs.diameter, eps)
