"""Constructors for the concrete chains of the model zoo.

Every model is built over an explicitly enumerated state space whose labels
are the structured states themselves (frozensets, tuples, ints), so
``model.decode(i)`` is just ``chain.states[i]``.  Enumeration orders are
fixed (bitmask order for subsets, lexicographic for words) so indices are
reproducible.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from .chain import Chain, as_fraction, build_chain
from .errors import EmptyStateSpace, ModelSpecError, ParseError, StateSpaceTooLarge

MODELS = (
    "knapsack",
    "bernoulli_laplace",
    "glauber_coloring",
    "bounded_subsets",
    "linear_extensions",
    "js_matchings",
    "dumbbell",
)
CONSTRUCTION_CAP = 200_000
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; edges are stored as sorted pairs."""

    vertices: tuple
    edges: tuple

    @classmethod
    def from_edges(cls, edges, vertices=()) -> "Graph":
        es = set()
        vs = set(vertices)
        for u, v in edges:
            if u == v:
                raise ModelSpecError(f"self-loop at {u!r}")
            es.add((u, v) if u <= v else (v, u))
            vs.update((u, v))
        return cls(vertices=tuple(sorted(vs)), edges=tuple(sorted(es)))

    def neighbors(self, v) -> list:
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    def degree(self, v) -> int:
        return sum(1 for e in self.edges if v in e)

    @property
    def max_degree(self) -> int:
        return max((self.degree(v) for v in self.vertices), default=0)


@dataclass(frozen=True)
class Bipartite:
    """Bipartite graph with left vertices 0..n1-1 and right vertices 0..n2-1; edges (i, j)."""

    n1: int
    n2: int
    edges: tuple

    @classmethod
    def complete(cls, n1: int, n2: int) -> "Bipartite":
        return cls(n1, n2, tuple((i, j) for i in range(n1) for j in range(n2)))


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(itertools.combinations(range(1, n + 1), 2))


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges([(i, i % n + 1) for i in range(1, n + 1)])


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model_id not in MODELS:
            raise ModelSpecError(f"unknown model {self.model_id!r}; choose from {', '.join(MODELS)}")


@dataclass(frozen=True, eq=False)
class Model:
    spec: ModelSpec
    chain: Chain

    def decode(self, i: int):
        return self.chain.states[i]

    def encode(self, state) -> int:
        return self.chain.index_of(state)

    @property
    def proper_states(self) -> tuple:
        """Indices of recurrent states (all of them except for Glauber's improper colorings)."""
        return self.chain.support


# --------------------------------------------------------------------------
# parameter helpers


def _param(spec: ModelSpec, name: str, default=None):
    if name in spec.params:
        return spec.params[name]
    if default is None:
        raise ModelSpecError(f"model {spec.model_id} needs parameter {name!r}")
    return default


def _int_param(spec, name, default=None) -> int:
    v = _param(spec, name, default)
    if isinstance(v, bool) or not isinstance(v, int):
        try:
            v = int(v)
        except (TypeError, ValueError):
            raise ModelSpecError(f"parameter {name} must be an integer") from None
    return v


def _check_cap(count: int, cap: int, what: str):
    if count > cap:
        raise StateSpaceTooLarge(f"{what}: {count} states exceed the cap {cap}", n=count, cap=cap)


def _subsets_by_mask(n: int, keep) -> list[frozenset]:
    """Subsets of {1..n} in bitmask order that satisfy ``keep``."""
    out = []
    for mask in range(1 << n):
        s = frozenset(i + 1 for i in range(n) if mask >> i & 1)
        if keep(s):
            out.append(s)
    return out


def _assemble(name, states, rows_by_state, allow_transient=False) -> Chain:
    trans = []
    for s in states:
        for t, p in rows_by_state[s].items():
            trans.append((s, t, p))
    return build_chain(states, trans, name=name, allow_transient=allow_transient)


def _add(row: dict, key, p: Fraction):
    row[key] = row.get(key, Fraction(0)) + p


# --------------------------------------------------------------------------
# models


def _knapsack(spec: ModelSpec, cap: int) -> Chain:
    a = [as_fraction(v) for v in _param(spec, "a")]
    b = as_fraction(_param(spec, "b"))
    n = len(a)
    if n == 0 or any(v <= 0 for v in a):
        raise ModelSpecError("item sizes must be positive and non-empty")
    if b < 0:
        raise ModelSpecError("capacity must be non-negative")
    _check_cap(1 << n, max(cap, 1 << 20), "knapsack subsets")

    def weight(s):
        return sum((a[i - 1] for i in s), Fraction(0))

    states = _subsets_by_mask(n, lambda s: weight(s) <= b)
    _check_cap(len(states), cap, "knapsack")
    step = Fraction(1, 2 * n)
    rows = {}
    for s in states:
        row = {s: HALF}
        w = weight(s)
        for i in range(1, n + 1):
            if i in s:
                _add(row, s - {i}, step)
            elif w + a[i - 1] <= b:
                _add(row, s | {i}, step)
            else:
                _add(row, s, step)
        rows[s] = row
    return _assemble("knapsack", states, rows)


def _bernoulli_laplace(spec: ModelSpec, cap: int) -> Chain:
    n = _int_param(spec, "n")
    k = _int_param(spec, "k")
    if not (1 <= k <= n / 2):
        raise ModelSpecError("Bernoulli-Laplace needs 1 <= k <= n/2")
    _check_cap(math.comb(n, k), cap, "bernoulli_laplace")
    states = [frozenset(c) for c in itertools.combinations(range(1, n + 1), k)]
    step = Fraction(1, 2 * k * (n - k))
    rows = {}
    for s in states:
        row = {s: HALF}
        outside = [j for j in range(1, n + 1) if j not in s]
        for i in sorted(s):
            for j in outside:
                _add(row, (s - {i}) | {j}, step)
        rows[s] = row
    return _assemble("bernoulli_laplace", states, rows)


def vertex_weights(graph: Graph, mode: str = "degree") -> dict:
    """The vertex-selection distribution J: proportional to degree, or uniform."""
    if mode == "uniform":
        return {v: Fraction(1, len(graph.vertices)) for v in graph.vertices}
    if mode != "degree":
        raise ModelSpecError(f"unknown vertex distribution {mode!r}")
    m = len(graph.edges)
    if m == 0 or any(graph.degree(v) == 0 for v in graph.vertices):
        raise ModelSpecError("degree-proportional J needs a graph without isolated vertices")
    return {v: Fraction(graph.degree(v), 2 * m) for v in graph.vertices}


def glauber_kappa(graph: Graph, k: int, X: tuple, v, pos: dict | None = None) -> dict:
    """Color law kappa_{X,v}: each color 1/k if v stays properly colored, rejected mass on X(v)."""
    pos = pos or {u: i for i, u in enumerate(graph.vertices)}
    blocked = {X[pos[u]] for u in graph.neighbors(v)}
    cur = X[pos[v]]
    law = {}
    for c in range(1, k + 1):
        target = c if c not in blocked else cur
        _add(law, target, Fraction(1, k))
    return law


def is_proper(graph: Graph, X: tuple) -> bool:
    pos = {u: i for i, u in enumerate(graph.vertices)}
    return all(X[pos[u]] != X[pos[w]] for u, w in graph.edges)


def _glauber(spec: ModelSpec, cap: int) -> Chain:
    graph = _param(spec, "graph")
    if not isinstance(graph, Graph):
        graph = Graph.from_edges(graph)
    k = _int_param(spec, "k")
    if k < 1:
        raise ModelSpecError("need at least one color")
    J = vertex_weights(graph, spec.params.get("J", "degree"))
    nv = len(graph.vertices)
    _check_cap(k**nv, cap, "glauber_coloring")
    states = list(itertools.product(range(1, k + 1), repeat=nv))
    if not any(is_proper(graph, X) for X in states):
        raise EmptyStateSpace(f"the graph has no proper {k}-coloring", k=k)
    pos = {u: i for i, u in enumerate(graph.vertices)}
    nbrs = {v: graph.neighbors(v) for v in graph.vertices}
    rows = {}
    for X in states:
        row = {}
        for v in graph.vertices:
            jv = J[v]
            blocked = {X[pos[u]] for u in nbrs[v]}
            for c in range(1, k + 1):
                if c in blocked:
                    _add(row, X, jv / k)
                else:
                    Y = X[: pos[v]] + (c,) + X[pos[v] + 1 :]
                    _add(row, Y, jv / k)
        rows[X] = {y: p for y, p in row.items() if p}
    return _assemble("glauber_coloring", states, rows, allow_transient=True)


def _bounded_subsets(spec: ModelSpec, cap: int) -> Chain:
    n = _int_param(spec, "n")
    k = _int_param(spec, "k")
    if not (0 <= k <= n) or n < 1:
        raise ModelSpecError("bounded subsets need n >= 1 and 0 <= k <= n")
    _check_cap(sum(math.comb(n, j) for j in range(k + 1)), cap, "bounded_subsets")
    states = _subsets_by_mask(n, lambda s: len(s) <= k)
    step = Fraction(1, 2 * n)
    rows = {}
    for s in states:
        row = {s: HALF}
        for i in range(1, n + 1):
            if i in s:
                _add(row, s - {i}, step)
            elif len(s) < k:
                _add(row, s | {i}, step)
            else:
                _add(row, s, step)
        rows[s] = row
    return _assemble("bounded_subsets", states, rows)


def position_weights(n: int) -> dict[int, Fraction]:
    """J(p) = zeta p (n - p) on p = 1..n-1 with zeta = 6/(n^3 - n); J(0) = J(n) = 0."""
    if n < 2:
        return {0: Fraction(0), 1: Fraction(0)}
    zeta = Fraction(6, n**3 - n)
    J = {p: zeta * p * (n - p) for p in range(1, n)}
    J[0] = Fraction(0)
    J[n] = Fraction(0)
    return J


def poset_closure(n: int, relations) -> set:
    """Transitive closure of ``a < b`` over elements 1..n; raises on cycles."""
    less = {(a, b) for a, b in relations}
    for a, b in less:
        if not (1 <= a <= n and 1 <= b <= n):
            raise ModelSpecError(f"relation {a} < {b} mentions an element outside 1..{n}")
    changed = True
    while changed:
        changed = False
        for a, b in list(less):
            for c, d in list(less):
                if b == c and (a, d) not in less:
                    less.add((a, d))
                    changed = True
    if any(a == b for a, b in less):
        raise ModelSpecError("the order relation has a cycle")
    return less


def is_linear_extension(word: Sequence[int], less: set) -> bool:
    where = {e: i for i, e in enumerate(word)}
    return all(where[a] < where[b] for a, b in less)


def swap_positions(word: tuple, i: int, j: int) -> tuple:
    """word o (i, j): exchange the entries at 1-indexed positions i and j."""
    w = list(word)
    w[i - 1], w[j - 1] = w[j - 1], w[i - 1]
    return tuple(w)


def _linear_extensions(spec: ModelSpec, cap: int) -> Chain:
    n = _int_param(spec, "n")
    if n < 2:
        raise ModelSpecError("linear extensions need n >= 2")
    less = poset_closure(n, spec.params.get("relations", ()))
    _check_cap(math.factorial(n), max(cap, 10**6), "linear_extensions")
    states = [w for w in itertools.permutations(range(1, n + 1)) if is_linear_extension(w, less)]
    if not states:
        raise EmptyStateSpace("the poset has no linear extension")
    _check_cap(len(states), cap, "linear_extensions")
    J = position_weights(n)
    valid = set(states)
    rows = {}
    for w in states:
        row = {w: Fraction(0)}
        for p in range(1, n):
            half = J[p] / 2
            _add(row, w, half)
            nxt = swap_positions(w, p, p + 1)
            _add(row, nxt if nxt in valid else w, half)
        rows[w] = row
    return _assemble("linear_extensions", states, rows)


def matching_sizes(graph: Bipartite) -> tuple[int, int]:
    top = min(graph.n1, graph.n2)
    return top, top - 1


def _js(spec: ModelSpec, cap: int) -> Chain:
    graph = _param(spec, "graph")
    if not isinstance(graph, Bipartite):
        raise ModelSpecError("js_matchings needs a Bipartite graph")
    E = list(graph.edges)
    if not E:
        raise EmptyStateSpace("graph has no edges")
    perfect, near = matching_sizes(graph)
    order = {e: i for i, e in enumerate(E)}
    states = []
    for size in (near, perfect):
        if size < 0:
            continue
        for combo in itertools.combinations(E, size):
            if len({u for u, _ in combo}) == size and len({v for _, v in combo}) == size:
                states.append(frozenset(combo))
        _check_cap(len(states), cap, "js_matchings")
    if not any(len(s) == perfect for s in states):
        raise EmptyStateSpace("graph has no perfect matching")
    states.sort(key=lambda s: sum(1 << order[e] for e in s))
    valid = set(states)
    step = Fraction(1, 2 * len(E))
    rows = {}
    for M in states:
        row = {M: HALF}
        left = {u: (u, v) for u, v in M}
        right = {v: (u, v) for u, v in M}
        for e in E:
            u, v = e
            if len(M) == perfect:
                nxt = M - {e} if e in M else M
            else:
                mu, mv = u in left, v in right
                if not mu and not mv:
                    nxt = M | {e}
                elif mu != mv:
                    other = left[u] if mu else right[v]
                    nxt = (M - {other}) | {e}
                else:
                    nxt = M
            _add(row, nxt if nxt in valid else M, step)
        rows[M] = row
    return _assemble("js_matchings", states, rows)


def _dumbbell(spec: ModelSpec, cap: int) -> Chain:
    n = _int_param(spec, "n")
    if n < 4 or n % 2:
        raise ModelSpecError("the two-hub bipartite chain needs an even n >= 4")
    _check_cap(n, cap, "dumbbell")
    states = list(range(1, n + 1))
    rows = {}
    for v in states:
        nb = list(range(3, n + 1)) if v <= 2 else [1, 2]
        row = {v: HALF}
        for u in nb:
            _add(row, u, Fraction(1, 2 * len(nb)))
        rows[v] = row
    return _assemble("dumbbell", states, rows)


_BUILDERS = {
    "knapsack": _knapsack,
    "bernoulli_laplace": _bernoulli_laplace,
    "glauber_coloring": _glauber,
    "bounded_subsets": _bounded_subsets,
    "linear_extensions": _linear_extensions,
    "js_matchings": _js,
    "dumbbell": _dumbbell,
}


def build_model(spec: ModelSpec, max_states: int = CONSTRUCTION_CAP) -> Model:
    """Enumerate the state space of ``spec`` and build its exact kernel."""
    chain = _BUILDERS[spec.model_id](spec, max_states)
    return Model(spec=spec, chain=chain)


def model(model_id: str, max_states: int = CONSTRUCTION_CAP, **params) -> Model:
    """Shorthand: ``model("bernoulli_laplace", n=4, k=2)``."""
    return build_model(ModelSpec(model_id, params), max_states=max_states)


# --------------------------------------------------------------------------
# closed-form bounds


@dataclass(frozen=True)
class NotApplicable:
    model: str
    bound: str
    reason: str


@dataclass
class TheoreticalBounds:
    model_id: str
    values: dict = field(default_factory=dict)
    not_applicable: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def glauber_beta(graph: Graph, k: int, J: dict | None = None) -> tuple[Fraction, object]:
    """max_i 1 - J(i)(1 - d(i)/k) + sum_{j~i} J(j)/k, with the maximizing vertex."""
    J = J or vertex_weights(graph)
    best = None
    for i in graph.vertices:
        val = 1 - J[i] * (1 - Fraction(graph.degree(i), k)) + sum(
            (J[j] / k for j in graph.neighbors(i)), Fraction(0)
        )
        if best is None or val > best[0]:
            best = (val, i)
    return best


def theoretical_bounds(spec: ModelSpec, eps, flow_metrics: dict | None = None) -> TheoreticalBounds:
    """Evaluate the closed-form mixing bounds known for ``spec``.

    Preconditions that fail are recorded in ``not_applicable`` rather than
    raised.  ``flow_metrics`` (keys ``C``, ``L``, ``size``) feeds the
    general knapsack bound, whose ingredients come from a constructed flow.
    """
    if not (0 < float(eps) < 1):
        raise ValueError("eps must lie in (0, 1)")
    eps = float(eps)
    out = TheoreticalBounds(spec.model_id)
    mid = spec.model_id
    na = out.not_applicable.append
    if mid == "glauber_coloring":
        graph = spec.params["graph"]
        if not isinstance(graph, Graph):
            graph = Graph.from_edges(graph)
        k = int(spec.params["k"])
        J = vertex_weights(graph, spec.params.get("J", "degree"))
        beta, vertex = glauber_beta(graph, k, J)
        out.values["beta"] = beta
        out.values["beta_vertex"] = vertex
        n = len(graph.vertices)
        if beta < 1:
            out.values["tau_bound"] = math.log(n / eps) / (1 - float(beta))
        else:
            na(NotApplicable(mid, "tau_bound", f"beta = {beta} is not below 1"))
        if k <= 2 * graph.max_degree:
            na(NotApplicable(mid, "k > 2 Delta", f"k = {k} <= 2 * {graph.max_degree}"))
    elif mid == "bernoulli_laplace":
        n, k = int(spec.params["n"]), int(spec.params["k"])
        if k >= 2:
            out.values["beta"] = 1 - Fraction(1, k)
            out.values["D"] = 2 * k
            out.values["tau_bound"] = k * math.log(2 * k / eps)
        else:
            na(NotApplicable(mid, "tau_bound", "the contraction argument assumes k >= 2"))
        if 2 * k == n:
            out.values["lambda1"] = 1 - Fraction(2, n)
    elif mid == "bounded_subsets":
        n, k = int(spec.params["n"]), int(spec.params["k"])
        out.values["beta"] = 1 - Fraction(1, 2 * n)
        out.values["D"] = 2 * k
        if k >= 1:
            out.values["tau_bound"] = 2 * n * math.log(2 * k / eps)
        else:
            na(NotApplicable(mid, "tau_bound", "single-state space"))
    elif mid == "linear_extensions":
        n = int(spec.params["n"])
        zeta = Fraction(6, n**3 - n)
        D = n * (n - 1) // 2
        out.values["zeta"] = zeta
        out.values["beta"] = 1 - zeta
        out.values["D"] = D
        out.values["tau_bound"] = math.log(D / eps) / float(zeta)
    elif mid == "dumbbell":
        out.values["phi"] = Fraction(1, 2)
        out.values["lambda1_upper"] = Fraction(7, 8)
    elif mid == "knapsack":
        n = len(spec.params["a"])
        if flow_metrics:
            C, L, size = flow_metrics["C"], flow_metrics["L"], flow_metrics["size"]
            out.values["tau_bound"] = knapsack_tau_bound(n, C, size, L, eps)
        else:
            na(NotApplicable(mid, "tau_bound", "needs C(f), L(f) from a constructed flow"))
    elif mid == "js_matchings":
        na(NotApplicable(mid, "tau_bound", "no positive mixing bound is available for this chain"))
    return out


def knapsack_tau_bound(n: int, C, size: int, L: int, eps) -> float:
    """2n (C/|Omega|) L (n + ln 1/eps)."""
    return 2 * n * (float(C) / size) * L * (n + math.log(1 / float(eps)))


# --------------------------------------------------------------------------
# graph and poset files

_EDGE = re.compile(r"^e\s+(\S+)\s+(\S+)$")
_LT = re.compile(r"^lt\s+(\S+)\s+(\S+)$")


def _token(s: str) -> Hashable:
    try:
        return int(s)
    except ValueError:
        return s


def parse_graph_text(text: str) -> Graph:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _EDGE.match(line)
        if not m:
            raise ParseError(lineno, "expected 'e <u> <v>'", column=1)
        u, v = _token(m.group(1)), _token(m.group(2))
        if u == v:
            raise ParseError(lineno, "self-loop", column=3)
        edges.append((u, v))
    return Graph.from_edges(edges)


def parse_poset_text(text: str) -> list[tuple[int, int]]:
    rel = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LT.match(line)
        if not m:
            raise ParseError(lineno, "expected 'lt <a> <b>'", column=1)
        try:
            rel.append((int(m.group(1)), int(m.group(2))))
        except ValueError:
            raise ParseError(lineno, "poset elements are integers 1..n", column=4) from None
    return rel


def bipartite_from_graph(graph: Graph) -> Bipartite:
    """Interpret an edge list with vertices ``l<i>`` / ``r<j>`` as a bipartite graph."""
    left, right, edges = set(), set(), []
    for u, v in graph.edges:
        u, v = str(u), str(v)
        if u.startswith("r") and v.startswith("l"):
            u, v = v, u
        if not (u.startswith("l") and v.startswith("r")):
            raise ModelSpecError("bipartite vertices must be named l<i> and r<j>")
        i, j = int(u[1:]), int(v[1:])
        left.add(i)
        right.add(j)
        edges.append((i, j))
    n1 = max(left) + 1
    n2 = max(right) + 1
    return Bipartite(n1, n2, tuple(sorted(edges)))
