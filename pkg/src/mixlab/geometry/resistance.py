"""Minimum-congestion fractional multicommodity flows (the resistance of a chain)."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..chain import Chain
from ..errors import TooLarge
from .lp import simplex
from .paths import FractionalFlow, flow_congestion

EXACT_MAX_STATES = 60
EXACT_MAX_EDGES = 400
APPROX_ACCURACY = 0.01
FLOW_TOL = 1e-11


@dataclass(frozen=True)
class ResistanceResult:
    flow: FractionalFlow
    R: float
    lower_bound: float  # certified lower bound on the optimum
    mode: str


def _edge_list(chain: Chain):
    edges = [(x, y) for x in range(chain.n_states) for y in sorted(chain.rows[x]) if y != x]
    Q = np.array([float(chain.Q(x, y)) for x, y in edges])
    return edges, Q


def _demands(chain: Chain) -> np.ndarray:
    pi = chain.pi_float
    D = np.outer(pi, pi)
    np.fill_diagonal(D, 0.0)
    return D


# --------------------------------------------------------------------------
# exact: arc-based LP, one commodity per source


def _arc_lp(chain: Chain, edges, Q, D):
    n, E = chain.n_states, len(edges)
    scale = D.max()
    d = D / scale  # demands normalized to at most one
    nv = n * E + 1  # f[s, e] then R
    rcol = n * E
    rows_cons = n * (n - 1)
    A = np.zeros((rows_cons + E, nv + E))  # trailing E slack columns
    b = np.zeros(rows_cons + E)
    r = 0
    for s in range(n):
        for v in range(n):
            if v == s:
                continue
            for k, (x, y) in enumerate(edges):
                if y == v:
                    A[r, s * E + k] += 1.0
                if x == v:
                    A[r, s * E + k] -= 1.0
            b[r] = d[s, v]
            r += 1
    for k in range(E):
        A[r, k : n * E : E] = 1.0
        A[r, rcol] = -Q[k] / scale
        A[r, nv + k] = 1.0
        r += 1
    c = np.zeros(nv + E)
    c[rcol] = 1.0
    return A, b, c, rcol


def _cancel_cycles(flow: dict, tol: float) -> None:
    """Remove directed cycles from a single-commodity arc flow in place."""
    while True:
        adj: dict[int, list[int]] = {}
        for (u, v), w in flow.items():
            if w > tol:
                adj.setdefault(u, []).append(v)
        cycle = _find_cycle(adj)
        if cycle is None:
            return
        arcs = list(zip(cycle, cycle[1:] + cycle[:1]))
        m = min(flow[a] for a in arcs)
        for a in arcs:
            flow[a] -= m


def _find_cycle(adj):
    color: dict[int, int] = {}
    for root in sorted(adj):
        if color.get(root):
            continue
        stack = [(root, iter(adj.get(root, ())))]
        path = [root]
        color[root] = 1
        while stack:
            u, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[u] = 2
                stack.pop()
                path.pop()
                continue
            c = color.get(nxt, 0)
            if c == 1:
                return path[path.index(nxt) :]
            if c == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return None


def _widest_path(adj, flow, s, t):
    """Max-bottleneck path from s to t; ties resolved by vertex order."""
    best = {s: math.inf}
    parent = {s: None}
    heap = [(-math.inf, s)]
    done = set()
    while heap:
        negw, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == t:
            break
        for v in adj.get(u, ()):
            w = min(-negw, flow[(u, v)])
            if w > best.get(v, 0.0):
                best[v] = w
                parent[v] = u
                heapq.heappush(heap, (-w, v))
    if t not in done:
        return None, 0.0
    path = [t]
    while path[-1] != s:
        path.append(parent[path[-1]])
    return tuple(reversed(path)), best[t]


def _decompose(n: int, s: int, flow: dict, demand: np.ndarray, tol: float) -> dict:
    """Peel widest paths from source s to each sink until its demand is routed."""
    _cancel_cycles(flow, tol)
    routes = {}
    for t in range(n):
        if t == s:
            continue
        need = demand[t]
        got = []
        while need > tol:
            adj: dict[int, list[int]] = {}
            for (u, v), w in sorted(flow.items()):
                if w > tol:
                    adj.setdefault(u, []).append(v)
            path, width = _widest_path(adj, flow, s, t)
            if path is None:
                break
            push = min(width, need)
            for a in zip(path, path[1:]):
                flow[a] -= push
            got.append((path, push))
            need -= push
        total = sum(w for _, w in got)
        if total <= 0:
            raise ValueError(f"no flow reaches {t} from {s}")
        routes[(s, t)] = [(p, w / total) for p, w in got]
    return routes


def resistance_exact(chain: Chain) -> ResistanceResult:
    """Solve the min-congestion arc LP with the built-in simplex, then split into paths."""
    ch = chain
    edges, Q = _edge_list(ch)
    n = ch.n_states
    if n > EXACT_MAX_STATES or len(edges) > EXACT_MAX_EDGES:
        raise TooLarge(f"exact LP limited to {EXACT_MAX_STATES} states and {EXACT_MAX_EDGES} edges",
                       n=n, edges=len(edges))
    D = _demands(ch)
    A, b, c, rcol = _arc_lp(ch, edges, Q, D)
    sol = simplex(c, A, b)
    E = len(edges)
    d = D / D.max()
    routes = {}
    for s in range(n):
        f = {e: float(sol.x[s * E + k]) for k, e in enumerate(edges)}
        routes.update(_decompose(n, s, f, d[s], FLOW_TOL * max(1.0, d.max())))
    flow = FractionalFlow(routes)
    R = float(flow_congestion(ch, flow).rho)
    return ResistanceResult(flow=flow, R=R, lower_bound=float(sol.x[rcol]), mode="exact_lp")


# --------------------------------------------------------------------------
# approximate: path columns priced by shortest paths under dual edge lengths


def _shortest_paths(n, edges, lengths):
    g = csr_matrix((lengths, ([e[0] for e in edges], [e[1] for e in edges])), shape=(n, n))
    dist, pred = dijkstra(g, directed=True, return_predecessors=True)
    return dist, pred


def _path_from(pred, s, t):
    p = [t]
    while p[-1] != s:
        p.append(int(pred[s, p[-1]]))
    return tuple(reversed(p))


def resistance_approx(chain: Chain, accuracy: float = APPROX_ACCURACY, max_rounds: int = 200) -> ResistanceResult:
    """Within (1 + accuracy) of the optimum, certified by a length-function lower bound.

    A restricted LP over a growing pool of paths is re-solved each round; its
    edge duals act as lengths, and every pair's shortest path under those
    lengths joins the pool. For any lengths l >= 0 the ratio
    sum_xy pi(x)pi(y) dist_l(x, y) / sum_e Q(e) l(e) is a lower bound on R,
    so the loop stops once the pool's congestion is within the tolerance of it.
    The reported R is the congestion of an explicit flow, never below the optimum.
    """
    ch = chain
    n = ch.n_states
    edges, Q = _edge_list(ch)
    E = len(edges)
    eidx = {e: k for k, e in enumerate(edges)}
    D = _demands(ch)
    scale = D.max()
    pairs = [(x, y) for x in range(n) for y in range(n) if x != y]
    dem = np.array([D[p] for p in pairs]) / scale
    Qs = Q / scale

    _, pred = _shortest_paths(n, edges, np.ones(E))
    pool = [[_path_from(pred, x, y)] for x, y in pairs]
    best_lb = 0.0
    for _ in range(max_rounds):
        cols = [(i, p) for i, ps in enumerate(pool) for p in ps]
        P = len(pairs)
        nv = len(cols) + 1 + E  # path weights, R, edge slacks
        A = np.zeros((P + E, nv))
        b = np.zeros(P + E)
        b[:P] = 1.0
        for j, (i, p) in enumerate(cols):
            A[i, j] = 1.0
            for a in zip(p, p[1:]):
                A[P + eidx[a], j] += dem[i]
        A[P:, len(cols)] = -Qs
        A[P:, len(cols) + 1 :] = np.eye(E)
        c = np.zeros(nv)
        c[len(cols)] = 1.0
        sol = simplex(c, A, b)
        ub = sol.objective
        lengths = np.maximum(sol.reduced[len(cols) + 1 :], 0.0)
        if lengths.sum() <= 0:
            lengths = np.ones(E)
        # tiny floor keeps Dijkstra from treating zero-length arcs as missing
        dist, pred = _shortest_paths(n, edges, lengths + 1e-12 * lengths.max())
        lb = float(sum(w * dist[x, y] for (x, y), w in zip(pairs, dem)) / (Qs @ lengths))
        best_lb = max(best_lb, lb)
        if ub <= (1 + accuracy) * best_lb:
            break
        grew = False
        for i, (x, y) in enumerate(pairs):
            p = _path_from(pred, x, y)
            if p not in pool[i]:
                pool[i].append(p)
                grew = True
        if not grew:
            break
    routes = {}
    for j, (i, p) in enumerate(cols):
        w = sol.x[j]
        if w > 1e-13:
            routes.setdefault(pairs[i], []).append((p, float(w)))
    for pair, rs in routes.items():
        total = sum(w for _, w in rs)
        routes[pair] = [(p, w / total) for p, w in sorted(rs)]
    flow = FractionalFlow(routes)
    R = float(flow_congestion(ch, flow).rho)
    return ResistanceResult(flow=flow, R=R, lower_bound=best_lb, mode="approx")


def resistance_min(chain: Chain, mode: str = "exact_lp") -> tuple[FractionalFlow, float]:
    """Minimum-congestion flow and its congestion R(f)."""
    if mode == "exact_lp":
        res = resistance_exact(chain)
    elif mode == "approx":
        res = resistance_approx(chain)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return res.flow, res.R
