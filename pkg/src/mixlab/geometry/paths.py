"""Canonical paths, fractional flows and their congestion."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from ..chain import Chain
from ..errors import InvalidPath, ParseError, WeightSumError

WEIGHT_TOL = 1e-12


def loop_erase(path: Iterable[int]) -> tuple:
    """Chronological loop erasure: cut out every cycle as soon as it closes."""
    out: list[int] = []
    where: dict[int, int] = {}
    for v in path:
        if v in where:
            cut = where[v]
            for u in out[cut + 1 :]:
                del where[u]
            del out[cut + 1 :]
        else:
            where[v] = len(out)
            out.append(v)
    return tuple(out)


def drop_holds(path: Iterable[int]) -> tuple:
    """Remove repeated consecutive states (self-loop steps)."""
    out: list[int] = []
    for v in path:
        if not out or out[-1] != v:
            out.append(v)
    return tuple(out)


@dataclass
class CanonicalPathSet:
    """One simple path (a vertex sequence x = v0, ..., vk = y) per ordered pair."""

    paths: dict = field(default_factory=dict)

    def as_flow(self) -> "FractionalFlow":
        return FractionalFlow({pair: [(p, Fraction(1))] for pair, p in self.paths.items()})


@dataclass
class FractionalFlow:
    """Per ordered pair, a list of (simple path, weight) with weights summing to one."""

    routes: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (Fraction, int)) for rs in self.routes.values() for _, w in rs)


@dataclass(frozen=True)
class CongestionReport:
    rho: object  # Fraction when all inputs are exact, else float
    rho_bar: object
    ell: int
    witness_edge: tuple

    def as_row(self) -> dict:
        return {
            "rho": self.rho,
            "rho_bar": self.rho_bar,
            "ell": self.ell,
            "witness_edge": f"{self.witness_edge[0]}->{self.witness_edge[1]}",
        }


def _check_path(chain: Chain, pair, path) -> int:
    x, y = pair
    if len(path) < 2 or path[0] != x or path[-1] != y:
        raise InvalidPath(f"path for {pair} must run from {x} to {y}", pair=pair, edge=None)
    if len(set(path)) != len(path):
        raise InvalidPath(f"path for {pair} is not simple", pair=pair, edge=None)
    for u, v in zip(path, path[1:]):
        if not (0 <= u < chain.n_states and 0 <= v < chain.n_states) or chain.P(u, v) == 0 or chain.Q(u, v) == 0:
            raise InvalidPath(f"path for {pair} uses the non-edge ({u}, {v})", pair=pair, edge=(u, v))
    return len(path) - 1


def _demand_pairs(chain: Chain):
    n = chain.n_states
    return [(x, y) for x in range(n) for y in range(n) if x != y]


def validate_paths(chain: Chain, gamma: CanonicalPathSet) -> None:
    for pair in _demand_pairs(chain):
        if pair not in gamma.paths:
            raise InvalidPath(f"no path for pair {pair}", pair=pair, edge=None)
        _check_path(chain, pair, gamma.paths[pair])


def validate_flow(chain: Chain, flow: FractionalFlow) -> None:
    for pair in _demand_pairs(chain):
        routes = flow.routes.get(pair)
        if not routes:
            raise WeightSumError(f"pair {pair} carries no flow", pair=pair, total=0)
        total = 0
        for path, w in routes:
            if w < 0:
                raise WeightSumError(f"negative weight on pair {pair}", pair=pair, total=str(w))
            _check_path(chain, pair, path)
            total += w
        exact = all(isinstance(w, (Fraction, int)) for _, w in routes)
        if (exact and total != 1) or (not exact and abs(float(total) - 1) > WEIGHT_TOL):
            raise WeightSumError(f"weights of pair {pair} sum to {total}", pair=pair, total=str(total))


def _congestion(chain: Chain, items, exact: bool) -> CongestionReport:
    """items yields (pair, path, weight); loads accumulate per oriented edge."""
    zero = Fraction(0) if exact else 0.0
    load: dict[tuple, object] = {}
    load_len: dict[tuple, object] = {}
    ell = 0
    pi = chain.pi if exact else chain.pi_float
    for (x, y), path, w in items:
        if not w:
            continue
        k = len(path) - 1
        ell = max(ell, k)
        d = pi[x] * pi[y] * (w if exact else float(w))
        for e in zip(path, path[1:]):
            load[e] = load.get(e, zero) + d
            load_len[e] = load_len.get(e, zero) + d * k
    best = best_bar = zero
    witness = None
    for e in sorted(load):
        q = chain.Q(*e) if exact else float(chain.Q(*e))
        r = load[e] / q
        if witness is None or r > best:
            best, witness = r, e
        best_bar = max(best_bar, load_len[e] / q)
    return CongestionReport(rho=best, rho_bar=best_bar, ell=ell, witness_edge=witness)


def path_congestion(chain: Chain, gamma: CanonicalPathSet) -> CongestionReport:
    """Exact rho, rho-bar, longest path length and the arg-max edge of a canonical path set."""
    validate_paths(chain, gamma)
    items = ((pair, p, Fraction(1)) for pair, p in gamma.paths.items() if pair[0] != pair[1])
    return _congestion(chain, items, exact=True)


def flow_congestion(chain: Chain, flow: FractionalFlow) -> CongestionReport:
    """R(f), R-bar(f), the longest supported path and the arg-max edge; exact for rational weights."""
    validate_flow(chain, flow)
    items = ((pair, p, w) for pair, rs in flow.routes.items() if pair[0] != pair[1] for p, w in rs)
    return _congestion(chain, items, exact=flow.exact)


def congestion_gap_bounds(report: CongestionReport) -> tuple:
    """(Phi lower bound, lambda_1 bounds from rho^2, from rho-bar, from rho * ell)."""
    rho, rho_bar, ell = report.rho, report.rho_bar, report.ell
    one = Fraction(1) if isinstance(rho, Fraction) else 1.0
    return (
        one / (2 * rho),
        one - one / (8 * rho * rho),
        one - one / rho_bar,
        one - one / (rho * ell),
    )


# --------------------------------------------------------------------------
# text formats

_PATH = re.compile(r"^path\s+(\d+)\s+(\d+)\s+(\d+)/(\d+)((?:\s+\d+)+)$")


def _as_exact(w) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, int):
        return Fraction(w)
    return Fraction(float(w)).limit_denominator(10**15)


def dump_flow(flow: FractionalFlow | CanonicalPathSet) -> str:
    """Lines ``path <x> <y> <num>/<den> <v0> ... <vk>``; float weights are rationalized per pair."""
    if isinstance(flow, CanonicalPathSet):
        flow = flow.as_flow()
    lines = []
    for pair in sorted(flow.routes):
        routes = flow.routes[pair]
        ws = [_as_exact(w) for _, w in routes]
        if not flow.exact and ws:
            ws[-1] = 1 - sum(ws[:-1], Fraction(0))
        for (path, _), w in zip(routes, ws):
            verts = " ".join(str(v) for v in path)
            lines.append(f"path {pair[0]} {pair[1]} {w.numerator}/{w.denominator} {verts}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_flow(text: str) -> FractionalFlow:
    routes: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _PATH.match(line)
        if not m:
            raise ParseError(lineno, "expected 'path <x> <y> <num>/<den> <v0> ... <vk>'", column=1)
        x, y, num, den = (int(m.group(i)) for i in range(1, 5))
        if den == 0:
            raise ParseError(lineno, "zero denominator")
        verts = tuple(int(v) for v in m.group(5).split())
        routes.setdefault((x, y), []).append((verts, Fraction(num, den)))
    return FractionalFlow(routes)


def parse_paths(text: str) -> CanonicalPathSet:
    flow = parse_flow(text)
    paths = {}
    for pair, rs in flow.routes.items():
        if len(rs) != 1 or rs[0][1] != 1:
            raise WeightSumError(f"pair {pair} must have exactly one path of weight 1", pair=pair, total=None)
        paths[pair] = rs[0][0]
    return CanonicalPathSet(paths)


def congestion_csv(report: CongestionReport) -> str:
    out = io.StringIO()
    row = report.as_row()
    out.write(",".join(row) + "\n")
    out.write(",".join(str(v) for v in row.values()) + "\n")
    return out.getvalue()


def shortest_path_set(chain: Chain) -> CanonicalPathSet:
    """BFS paths (fewest hops, smallest-index tie-break) for every ordered pair."""
    n = chain.n_states
    nbrs = [sorted(y for y in chain.rows[x] if y != x) for x in range(n)]
    paths = {}
    for x in range(n):
        parent = {x: None}
        queue = [x]
        for u in queue:
            for v in nbrs[u]:
                if v not in parent:
                    parent[v] = u
                    queue.append(v)
        for y in range(n):
            if y == x or y not in parent:
                continue
            p = [y]
            while p[-1] != x:
                p.append(parent[p[-1]])
            paths[(x, y)] = tuple(reversed(p))
    return CanonicalPathSet(paths)


def random_path_set(chain: Chain, rng) -> CanonicalPathSet:
    """A random valid canonical path set: loop-erased random walks from x until they hit y."""
    n = chain.n_states
    nbrs = [sorted(y for y in chain.rows[x] if y != x) for x in range(n)]
    paths = {}
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            walk = [x]
            while walk[-1] != y:
                walk.append(nbrs[walk[-1]][int(rng.integers(len(nbrs[walk[-1]])))])
            paths[(x, y)] = loop_erase(walk)
    return CanonicalPathSet(paths)
