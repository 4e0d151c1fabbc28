"""Exactly represented finite Markov chains.

A :class:`Chain` stores its kernel as sparse rows of :class:`fractions.Fraction`
and its stationary distribution as exact rationals.  Structural facts
(stochasticity, stationarity, detailed balance) are checked exactly; distances
and mixing times are computed in binary64.

States are addressed by integer index ``0..N-1`` everywhere in the public API;
``Chain.index_of`` maps a label to its index.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    Diverged,
    LengthMismatch,
    NotAperiodic,
    NotIrreducible,
    NotReversible,
    ParseError,
    RowSumError,
)

FLOAT_TOL = 1e-12


def as_fraction(p) -> Fraction:
    """Coerce an exact number to Fraction; floats are refused."""
    if isinstance(p, Fraction):
        return p
    if isinstance(p, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(p, int):
        return Fraction(p)
    if isinstance(p, str):
        return Fraction(p)
    if isinstance(p, (float, np.floating)):
        raise TypeError(f"probability {p!r} is a float; exact rationals are required")
    raise TypeError(f"cannot interpret {p!r} as a rational")


@dataclass(frozen=True, eq=False)
class Chain:
    """Finite ergodic Markov chain with an exact rational kernel.

    ``support`` lists the states of the unique closed class.  For an
    irreducible chain it is every state; chains built with
    ``allow_transient=True`` may carry transient states with ``pi == 0``.
    """

    name: str
    states: tuple
    rows: tuple  # tuple[dict[int, Fraction], ...]
    pi: tuple  # tuple[Fraction, ...]
    lazy: bool
    support: tuple = ()

    @property
    def n_states(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __repr__(self) -> str:
        return f"Chain({self.name!r}, N={len(self.states)}, lazy={self.lazy})"

    @cached_property
    def _index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def index_of(self, label: Hashable) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown state {label!r}") from None

    def P(self, x: int, y: int) -> Fraction:
        return self.rows[x].get(y, Fraction(0))

    @property
    def irreducible(self) -> bool:
        return len(self.support) == len(self.states)

    @cached_property
    def dense(self) -> np.ndarray:
        """Float kernel as a dense array (read-only)."""
        n = len(self.states)
        P = np.zeros((n, n))
        for x, row in enumerate(self.rows):
            for y, p in row.items():
                P[x, y] = float(p)
        P.setflags(write=False)
        return P

    @cached_property
    def pi_float(self) -> np.ndarray:
        v = np.array([float(p) for p in self.pi])
        v.setflags(write=False)
        return v

    def edges(self) -> list[tuple[int, int]]:
        """Oriented non-loop edges of the underlying graph, sorted."""
        return sorted((x, y) for x, row in enumerate(self.rows) for y in row if y != x)

    def Q(self, x: int, y: int) -> Fraction:
        return self.pi[x] * self.P(x, y)

    def restricted(self) -> "Chain":
        """The chain on its closed class (itself when irreducible)."""
        if self.irreducible:
            return self
        keep = list(self.support)
        pos = {s: i for i, s in enumerate(keep)}
        rows = tuple({pos[y]: p for y, p in self.rows[x].items()} for x in keep)
        return Chain(
            name=self.name,
            states=tuple(self.states[x] for x in keep),
            rows=rows,
            pi=tuple(self.pi[x] for x in keep),
            lazy=all(r.get(i, 0) >= Fraction(1, 2) for i, r in enumerate(rows)),
            support=tuple(range(len(keep))),
        )


def _strong_components(n: int, rows: Sequence[dict]) -> tuple[int, np.ndarray]:
    src, dst = [], []
    for x, row in enumerate(rows):
        for y in row:
            src.append(x)
            dst.append(y)
    graph = csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    return connected_components(graph, directed=True, connection="strong")


def _period(members: Sequence[int], rows: Sequence[dict]) -> int:
    """gcd of cycle lengths in a strongly connected class (BFS level trick)."""
    inside = set(members)
    if any(x in rows[x] for x in members):
        return 1
    root = members[0]
    level = {root: 0}
    queue = deque([root])
    g = 0
    while queue:
        u = queue.popleft()
        for v in rows[u]:
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
                if g == 1:
                    return 1
    return g


def _pi_by_detailed_balance(members: Sequence[int], rows: Sequence[dict]) -> dict | None:
    """Spanning-tree solve of pi(x)P(x,y) = pi(y)P(y,x); None if not reversible."""
    root = members[0]
    inside = set(members)
    w = {root: Fraction(1)}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v, p in rows[u].items():
            if v in inside and v not in w:
                back = rows[v].get(u)
                if not back:
                    return None
                w[v] = w[u] * p / back
                queue.append(v)
    total = sum(w.values())
    return {x: q / total for x, q in w.items()}


def _pi_by_elimination(members: Sequence[int], rows: Sequence[dict]) -> dict:
    """Solve pi P = pi, sum pi = 1 on a closed class by exact Gaussian elimination."""
    pos = {s: i for i, s in enumerate(members)}
    m = len(members)
    # A pi^T = e_last with A = (P^T - I) and last row replaced by ones
    A = [[Fraction(0)] * (m + 1) for _ in range(m)]
    for x in members:
        for y, p in rows[x].items():
            if y in pos:
                A[pos[y]][pos[x]] += p
    for i in range(m):
        A[i][i] -= 1
    A[m - 1] = [Fraction(1)] * m + [Fraction(1)]
    for col in range(m):
        piv = next((r for r in range(col, m) if A[r][col] != 0), None)
        if piv is None:
            raise NotIrreducible("singular stationary system", state=members[col])
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [a * inv for a in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return {x: A[pos[x]][m] for x in members}


def build_chain(
    states: Sequence[Hashable],
    transitions: Iterable[tuple],
    name: str = "chain",
    allow_transient: bool = False,
) -> Chain:
    """Assemble and validate a chain from labelled transitions.

    ``transitions`` yields ``(src_label, dst_label, prob)`` with exact
    rational ``prob`` in (0, 1]; repeated pairs accumulate.  Rows must sum to
    exactly one.  The chain must be irreducible and aperiodic; with
    ``allow_transient`` it may instead have a single closed aperiodic class
    reachable from everywhere (other states get ``pi == 0``).
    """
    states = tuple(states)
    n = len(states)
    if n == 0:
        raise NotIrreducible("empty state space", state=None)
    index = {s: i for i, s in enumerate(states)}
    if len(index) != n:
        raise ValueError("duplicate state labels")
    rows: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    for src, dst, p in transitions:
        p = as_fraction(p)
        if not (0 < p <= 1):
            raise ValueError(f"probability {p} for ({src!r}, {dst!r}) is outside (0, 1]")
        x, y = index[src], index[dst]
        rows[x][y] = rows[x].get(y, Fraction(0)) + p
    for x, row in enumerate(rows):
        total = sum(row.values(), Fraction(0))
        if total != 1:
            raise RowSumError(
                f"row of state {states[x]!r} sums to {total}", state=states[x], total=str(total)
            )

    ncomp, labels = _strong_components(n, rows)
    if ncomp == 1:
        support = list(range(n))
    else:
        closed = []
        for c in range(ncomp):
            members = np.flatnonzero(labels == c)
            if all(labels[y] == c for x in members for y in rows[x]):
                closed.append(c)
        if not allow_transient or len(closed) != 1:
            # name a state that cannot reach (or be reached from) the first state
            bad = next(x for x in range(n) if labels[x] != labels[0])
            raise NotIrreducible(
                f"state {states[bad]!r} is not mutually reachable with {states[0]!r}",
                state=states[bad],
            )
        support = [int(x) for x in np.flatnonzero(labels == closed[0])]

    period = _period(support, rows)
    if period != 1:
        raise NotAperiodic(
            f"state {states[support[0]]!r} has period {period}",
            state=states[support[0]],
            period=period,
        )

    pi_map = _pi_by_detailed_balance(support, rows)
    if pi_map is None or not _is_stationary(pi_map, support, rows):
        pi_map = _pi_by_elimination(support, rows)
    if not _is_stationary(pi_map, support, rows):
        raise NotIrreducible("no stationary distribution found", state=states[support[0]])
    pi = tuple(pi_map.get(x, Fraction(0)) for x in range(n))
    half = Fraction(1, 2)
    lazy = all(rows[x].get(x, 0) >= half for x in range(n))
    return Chain(name=name, states=states, rows=tuple(rows), pi=pi, lazy=lazy, support=tuple(support))


def _is_stationary(pi_map: dict, members: Sequence[int], rows: Sequence[dict]) -> bool:
    acc = {x: Fraction(0) for x in members}
    for x in members:
        px = pi_map.get(x, 0)
        if px < 0:
            return False
        for y, p in rows[x].items():
            if y not in acc:
                return False
            acc[y] += px * p
    return all(acc[x] == pi_map.get(x, 0) for x in members) and sum(acc.values()) == 1


def check_reversibility(chain: Chain) -> dict[tuple[int, int], Fraction]:
    """Return the edge weights Q(x,y) = pi(x)P(x,y), x != y, after verifying detailed balance.

    Raises :class:`NotReversible` on the first violated pair.  Transient
    states (pi == 0) are ignored.
    """
    Q = {}
    live = set(chain.support)
    for x in chain.support:
        for y, p in chain.rows[x].items():
            if y == x or y not in live:
                continue
            lhs = chain.pi[x] * p
            rhs = chain.pi[y] * chain.P(y, x)
            if lhs != rhs:
                raise NotReversible(
                    f"detailed balance fails at ({chain.states[x]!r}, {chain.states[y]!r}): {lhs} != {rhs}",
                    x=chain.states[x],
                    y=chain.states[y],
                    lhs=str(lhs),
                    rhs=str(rhs),
                )
            Q[(x, y)] = lhs
    return Q


def lazify(chain: Chain) -> Chain:
    """Return the chain with kernel (I + P)/2."""
    half = Fraction(1, 2)
    rows = []
    for x, row in enumerate(chain.rows):
        new = {y: p * half for y, p in row.items()}
        new[x] = new.get(x, Fraction(0)) + half
        rows.append(new)
    return Chain(
        name=f"lazy({chain.name})" if not chain.name.startswith("lazy") else chain.name,
        states=chain.states,
        rows=tuple(rows),
        pi=chain.pi,
        lazy=True,
        support=chain.support,
    )


def _is_exact_vector(v) -> bool:
    return all(isinstance(a, (Fraction, int)) and not isinstance(a, bool) for a in v)


def point_mass(chain: Chain, x: int, exact: bool = True):
    if exact:
        v = [Fraction(0)] * chain.n_states
        v[x] = Fraction(1)
        return v
    v = np.zeros(chain.n_states)
    v[x] = 1.0
    return v


def _step_exact(chain: Chain, mu: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * chain.n_states
    for x, m in enumerate(mu):
        if m:
            for y, p in chain.rows[x].items():
                out[y] += m * p
    return out


def power_distribution(chain: Chain, start, t: int, exact: bool | None = None):
    """Distribution after ``t`` steps from ``start``: start . P^t.

    Exact (list of Fraction) when ``start`` is rational and ``exact`` is not
    False, by iterated multiplication (t <= 10^4); otherwise a float array via
    repeated squaring.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if len(start) != chain.n_states:
        raise LengthMismatch(f"start has length {len(start)}, chain has {chain.n_states} states")
    if exact is None:
        exact = _is_exact_vector(start) and t <= 10_000
    if exact:
        if t > 10_000:
            raise ValueError("exact powering is limited to t <= 10^4")
        mu = [as_fraction(a) for a in start]
        for _ in range(t):
            mu = _step_exact(chain, mu)
        return mu
    mu = np.asarray([float(a) for a in start])
    if t == 0:
        return mu
    return mu @ np.linalg.matrix_power(chain.dense, t)


def variation_distance(a, b):
    """Total variation distance (1/2) sum |a - b|; exact when both inputs are."""
    if len(a) != len(b):
        raise LengthMismatch(f"lengths {len(a)} and {len(b)} differ")
    if _is_exact_vector(a) and _is_exact_vector(b):
        return sum((abs(Fraction(x) - Fraction(y)) for x, y in zip(a, b)), Fraction(0)) / 2
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 0.5 * float(np.abs(a - b).sum())


def distance_from_stationarity(chain: Chain, x: int, t: int, exact: bool = False):
    """Delta_x(t) = || P^t(x, .) - pi ||_TV."""
    if exact:
        return variation_distance(power_distribution(chain, point_mass(chain, x), t, exact=True), chain.pi)
    mu = power_distribution(chain, point_mass(chain, x, exact=False), t, exact=False)
    return variation_distance(mu, chain.pi_float)


def _le(value, eps, exact: bool) -> bool:
    return value <= eps if exact else value <= float(eps) + FLOAT_TOL


def exact_mixing_time(chain: Chain, x: int, eps, cap: int = 10**6, exact: bool = False) -> int:
    """tau_x(eps): the least t with Delta_x(t') <= eps for every t' >= t.

    Doubling then bisection on t, each probe recomputing Delta from scratch;
    afterwards every t' in [tau, 2 tau] is re-checked, so a non-monotone
    distance curve cannot go unnoticed.
    """
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    if exact:
        eps = as_fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator(10**12)

    def ok(t: int) -> bool:
        return _le(distance_from_stationarity(chain, x, t, exact=exact), eps, exact)

    if ok(0):
        lo, hi = -1, 0
    else:
        lo, hi = 0, 1
        while not ok(hi):
            lo, hi = hi, hi * 2
            if hi > cap:
                raise Diverged(f"Delta_x(t) > eps up to the cap t = {cap}", state=chain.states[x], cap=cap)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
    tau = hi
    # guard window [tau, 2 tau]
    for _ in range(64):
        mu = power_distribution(chain, point_mass(chain, x, exact=exact), tau, exact=exact)
        bad = None
        for s in range(tau, 2 * tau + 1):
            ref = chain.pi if exact else chain.pi_float
            if not _le(variation_distance(mu, ref), eps, exact):
                bad = s
            mu = _step_exact(chain, mu) if exact else mu @ chain.dense
        if bad is None:
            return tau
        tau = bad + 1
        if tau > cap:
            raise Diverged("mixing time exceeds cap", state=chain.states[x], cap=cap)
    raise Diverged("distance curve failed to settle", state=chain.states[x], cap=cap)


def mixing_times(chain: Chain, eps, cap: int = 10**6) -> np.ndarray:
    """tau_x(eps) for every state x at once (float arithmetic).

    Iterates P^t row-block wise; the first t at which Delta_x drops to eps is
    accepted only if Delta_x stays below eps up to 2t.
    """
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    P = chain.dense
    pi = chain.pi_float
    n = chain.n_states
    tau = np.full(n, -1, dtype=np.int64)
    last_bad = np.full(n, -1, dtype=np.int64)
    Pt = np.eye(n)
    t = 0
    thr = float(eps) + FLOAT_TOL
    while True:
        d = 0.5 * np.abs(Pt - pi).sum(axis=1)
        bad = d > thr
        last_bad[bad] = t
        done = (~bad) & (tau < 0)
        tau[done] = t
        # a state whose distance rises again is re-opened
        reopen = bad & (tau >= 0)
        tau[reopen] = -1
        if np.all(tau >= 0) and t >= 2 * tau.max():
            return last_bad + 1
        t += 1
        if t > cap:
            raise Diverged(f"Delta_x(t) > eps up to the cap t = {cap}", cap=cap)
        Pt = Pt @ P


# --------------------------------------------------------------------------
# text format

_HEADER = re.compile(r"^chain\s+(\S+)\s+(\d+)$")
_STATE = re.compile(r"^state\s+(\d+)\s+(\S+)$")
_TRANS = re.compile(r"^t\s+(\S+)\s+(\S+)\s+(\S+)$")
_RATIONAL = re.compile(r"^(\d+)/(\d+)$")


def parse_chain_text(text: str, allow_transient: bool = False) -> Chain:
    """Parse the line-oriented chain format (see README); floats are refused."""
    name = None
    size = None
    labels: dict[int, str] = {}
    transitions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if name is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError(lineno, "expected header 'chain <name> <N>'", column=1)
            name, size = m.group(1), int(m.group(2))
            continue
        if line.startswith("state"):
            m = _STATE.match(line)
            if not m:
                raise ParseError(lineno, "expected 'state <index> <label>'", column=1)
            idx = int(m.group(1))
            if idx >= size:
                raise ParseError(lineno, f"state index {idx} out of range for N = {size}", column=7)
            if idx in labels:
                raise ParseError(lineno, f"state {idx} declared twice", column=7)
            labels[idx] = m.group(2)
            continue
        if line.startswith("t"):
            m = _TRANS.match(line)
            if not m:
                raise ParseError(lineno, "expected 't <src> <dst> <num>/<den>'", column=1)
            src, dst, prob = m.groups()
            col = raw.index(prob) + 1
            r = _RATIONAL.match(prob)
            if not r:
                raise ParseError(lineno, f"probability {prob!r} is not an exact rational num/den", column=col)
            if int(r.group(2)) == 0:
                raise ParseError(lineno, "zero denominator", column=col)
            try:
                s, d = int(src), int(dst)
            except ValueError:
                raise ParseError(lineno, "state indices must be integers", column=3) from None
            for v in (s, d):
                if not 0 <= v < size:
                    raise ParseError(lineno, f"state index {v} out of range", column=3)
            transitions.append((lineno, s, d, Fraction(int(r.group(1)), int(r.group(2)))))
            continue
        raise ParseError(lineno, f"unrecognized line {line!r}", column=1)
    if name is None:
        raise ParseError(1, "missing header")
    missing = [i for i in range(size) if i not in labels]
    if missing:
        raise ParseError(len(text.splitlines()), f"state {missing[0]} not declared")
    for lineno, s, d, p in transitions:
        if not 0 < p <= 1:
            raise ParseError(lineno, f"probability {p} outside (0, 1]")
    states = [labels[i] for i in range(size)]
    return build_chain(states, [(labels[s], labels[d], p) for _, s, d, p in transitions], name=name,
                       allow_transient=allow_transient)


def read_chain_file(path, allow_transient: bool = False) -> Chain:
    with open(path, encoding="utf-8") as fh:
        return parse_chain_text(fh.read(), allow_transient=allow_transient)


def format_chain(chain: Chain) -> str:
    """Serialize to the text format; labels are rendered with ``str`` and must not contain spaces."""
    lines = [f"chain {chain.name.replace(' ', '_')} {chain.n_states}"]
    for i, s in enumerate(chain.states):
        lines.append(f"state {i} {_label_token(s)}")
    for x, row in enumerate(chain.rows):
        for y in sorted(row):
            p = row[y]
            lines.append(f"t {x} {y} {p.numerator}/{p.denominator}")
    return "\n".join(lines) + "\n"


def _label_token(s) -> str:
    text = str(s) if not isinstance(s, (tuple, frozenset)) else _compact(s)
    return re.sub(r"\s+", "", text) or "_"


def _compact(s) -> str:
    if isinstance(s, frozenset):
        return "{" + ",".join(str(v) for v in sorted(s, key=repr)) + "}"
    return "(" + ",".join(_compact(v) if isinstance(v, (tuple, frozenset)) else str(v) for v in s) + ")"
