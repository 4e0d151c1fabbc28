"""The couplings used in the mixing proofs for the zoo chains, token by token."""

from __future__ import annotations

from fractions import Fraction

from ..errors import NoBuiltinCoupling
from ..zoo import (
    Graph,
    Model,
    glauber_kappa,
    matching_sizes,
    position_weights,
    swap_positions,
    vertex_weights,
)
from .path_coupling import PathCouplingSpec
from .strategy import CouplingStrategy

HALF = Fraction(1, 2)


# --------------------------------------------------------------------------
# Bernoulli-Laplace: full coupling through the sorted bijection g : X\Y -> Y\X


def bl_move(X: frozenset, i: int, j: int) -> frozenset:
    return (X - {i}) | {j}


def bernoulli_laplace_coupling(m: Model) -> CouplingStrategy:
    ch = m.chain
    n, k = int(m.spec.params["n"]), int(m.spec.params["k"])
    step = Fraction(1, 2 * k * (n - k))

    def randomness(x, y):
        X = ch.states[x]
        toks = [((0, None, None), HALF)]
        toks += [((1, i, j), step) for i in sorted(X) for j in range(1, n + 1) if j not in X]
        return toks

    def joint_step(x, y, tok):
        r, i, j = tok
        if r == 0:
            return x, y
        X, Y = ch.states[x], ch.states[y]
        X2 = bl_move(X, i, j)
        if x == y:
            return ch.index_of(X2), ch.index_of(X2)
        S, T = sorted(X - Y), sorted(Y - X)
        g = dict(zip(S, T))
        ginv = dict(zip(T, S))
        i2 = i if i in Y else g[i]
        j2 = j if j not in Y else ginv[j]
        return ch.index_of(X2), ch.index_of(bl_move(Y, i2, j2))

    return CouplingStrategy(ch, joint_step, randomness, name="bernoulli_laplace")


def symmetric_difference_size(m: Model):
    states = m.chain.states
    return lambda a, b: len(states[a] ^ states[b])


# --------------------------------------------------------------------------
# Glauber dynamics: Hamming-adjacent pairs, color c1 drawn from the kappa overlap


def glauber_coupling(m: Model) -> PathCouplingSpec:
    ch = m.chain
    graph = m.spec.params["graph"]
    if not isinstance(graph, Graph):
        graph = Graph.from_edges(graph)
    k = int(m.spec.params["k"])
    J = vertex_weights(graph, m.spec.params.get("J", "degree"))
    pos = {u: i for i, u in enumerate(graph.vertices)}
    kappas: dict = {}

    def kappa(x, v):
        key = (x, v)
        if key not in kappas:
            kappas[key] = glauber_kappa(graph, k, ch.states[x], v, pos)
        return kappas[key]

    def randomness(x, y):
        toks = []
        for v in graph.vertices:
            kx, ky = kappa(x, v), kappa(y, v)
            gap = sum((max(Fraction(0), ky.get(c, 0) - kx.get(c, 0)) for c in ky), Fraction(0))
            for c0, px in sorted(kx.items()):
                py = ky.get(c0, Fraction(0))
                keep = min(px, py)
                if keep:
                    toks.append(((v, c0, "same", c0), J[v] * keep))
                if px > py:
                    for c1, q in sorted(ky.items()):
                        extra = q - kx.get(c1, Fraction(0))
                        if extra > 0:
                            toks.append(((v, c0, "resid", c1), J[v] * (px - py) * extra / gap))
        return toks

    def recolor(x, v, c):
        X = ch.states[x]
        return ch.index_of(X[: pos[v]] + (c,) + X[pos[v] + 1 :])

    def joint_step(x, y, tok):
        v, c0, _, c1 = tok
        return recolor(x, v, c0), recolor(y, v, c1)

    cs = CouplingStrategy(ch, joint_step, randomness, name="glauber")
    adjacency = {}
    for x, X in enumerate(ch.states):
        for v in graph.vertices:
            for c in range(1, k + 1):
                if c != X[pos[v]]:
                    y = recolor(x, v, c)
                    if x < y:
                        adjacency[(x, y)] = 1
    return PathCouplingSpec.build(cs, adjacency)


def hamming(m: Model):
    states = m.chain.states
    return lambda a, b: sum(1 for u, v in zip(states[a], states[b]) if u != v)


# --------------------------------------------------------------------------
# subsets of size at most k: delta = |X xor Y| + ||X| - |Y||, adjacent when delta = 2


def subset_move(X: frozenset, r: int, i: int, k: int) -> frozenset:
    if r == 0:
        return X
    if i in X:
        return X - {i}
    return X | {i} if len(X) < k else X


def subset_delta(X: frozenset, Y: frozenset) -> int:
    return len(X ^ Y) + abs(len(X) - len(Y))


def bounded_subsets_coupling(m: Model) -> PathCouplingSpec:
    ch = m.chain
    n, k = int(m.spec.params["n"]), int(m.spec.params["k"])
    step = Fraction(1, 2 * n)
    toks = [((r, i), step) for r in (0, 1) for i in range(1, n + 1)]

    def joint_step(x, y, tok):
        r, i = tok
        X, Y = ch.states[x], ch.states[y]
        X2 = subset_move(X, r, i, k)
        if x == y:
            return ch.index_of(X2), ch.index_of(X2)
        diff = X ^ Y
        if len(X) != len(Y):
            # case (i): one set is the other plus p; only one side fires on p
            (p,) = diff
            rY = 1 - r if i == p else r
            Y2 = subset_move(Y, rY, i, k)
        else:
            # case (ii): X = S + p, Y = S + q; the roles of p and q are exchanged
            (p,) = X - Y
            (q,) = Y - X
            j = q if i == p else p if i == q else i
            Y2 = subset_move(Y, r, j, k)
        return ch.index_of(X2), ch.index_of(Y2)

    cs = CouplingStrategy(ch, joint_step, lambda x, y: toks, name="bounded_subsets")
    adjacency = {}
    for x, X in enumerate(ch.states):
        for y in range(x + 1, len(ch.states)):
            if subset_delta(X, ch.states[y]) == 2:
                adjacency[(x, y)] = 2
    return PathCouplingSpec.build(cs, adjacency)


# --------------------------------------------------------------------------
# linear extensions: transposition adjacency g ~ g o (i, j) with weight j - i


def _transposition(g: tuple, h: tuple) -> tuple[int, int] | None:
    diff = [p for p in range(len(g)) if g[p] != h[p]]
    if len(diff) == 2:
        i, j = diff
        if g[i] == h[j] and g[j] == h[i]:
            return i + 1, j + 1
    return None


def linear_extensions_coupling(m: Model) -> PathCouplingSpec:
    ch = m.chain
    n = int(m.spec.params["n"])
    J = position_weights(n)
    valid = set(ch.states)
    toks = [((p, r), J[p] / 2) for p in range(1, n) for r in (0, 1)]

    def move(g, p, r):
        if r == 1:
            nxt = swap_positions(g, p, p + 1)
            if nxt in valid:
                return nxt
        return g

    def joint_step(x, y, tok):
        p, r = tok
        g, h = ch.states[x], ch.states[y]
        g2 = move(g, p, r)
        if x == y:
            return ch.index_of(g2), ch.index_of(g2)
        ij = _transposition(g, h)
        rh = 1 - r if ij is not None and ij[1] - ij[0] == 1 and p == ij[0] else r
        return ch.index_of(g2), ch.index_of(move(h, p, rh))

    cs = CouplingStrategy(ch, joint_step, lambda x, y: toks, name="linear_extensions")
    adjacency = {}
    for x, g in enumerate(ch.states):
        for i in range(1, n):
            for j in range(i + 1, n + 1):
                h = swap_positions(g, i, j)
                if h in valid:
                    y = ch.index_of(h)
                    if x < y:
                        adjacency[(x, y)] = j - i
    return PathCouplingSpec.build(cs, adjacency)


# --------------------------------------------------------------------------
# perfect and near-perfect matchings: both sides read the same (r, e) token


def js_move(M: frozenset, r: int, e: tuple, perfect: int) -> frozenset:
    if r == 0:
        return M
    if len(M) == perfect:
        return M - {e} if e in M else M
    u, v = e
    left = {a: (a, b) for a, b in M}
    right = {b: (a, b) for a, b in M}
    mu, mv = u in left, v in right
    if not mu and not mv:
        return M | {e}
    if mu != mv:
        return (M - {left[u] if mu else right[v]}) | {e}
    return M


def js_shared_coupling(m: Model) -> CouplingStrategy:
    """Both matchings apply the same (r, e) draw: the identity coupling of the move rules."""
    ch = m.chain
    graph = m.spec.params["graph"]
    perfect, _ = matching_sizes(graph)
    step = Fraction(1, 2 * len(graph.edges))
    toks = [((r, e), step) for r in (0, 1) for e in graph.edges]

    def joint_step(x, y, tok):
        r, e = tok
        a = js_move(ch.states[x], r, e, perfect)
        b = js_move(ch.states[y], r, e, perfect)
        return ch.index_of(a), ch.index_of(b)

    return CouplingStrategy(ch, joint_step, lambda x, y: toks, name="js_shared")


_BUILTIN = {
    "bernoulli_laplace": bernoulli_laplace_coupling,
    "glauber_coloring": glauber_coupling,
    "bounded_subsets": bounded_subsets_coupling,
    "linear_extensions": linear_extensions_coupling,
}


def builtin_coupling(m: Model):
    """The coupling from the model's mixing proof: a full strategy or a path-coupling spec."""
    build = _BUILTIN.get(m.spec.model_id)
    if build is None:
        raise NoBuiltinCoupling(f"no built-in coupling for {m.spec.model_id}", model=m.spec.model_id)
    return build(m)


def builtin_metric(m: Model):
    """Distance function that pairs with the builtin coupling of the model."""
    mid = m.spec.model_id
    if mid == "bernoulli_laplace":
        return symmetric_difference_size(m)
    pcs = builtin_coupling(m)
    return lambda a, b: int(pcs.metric[a, b])
