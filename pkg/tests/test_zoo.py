import math
from fractions import Fraction as F
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.chain import check_reversibility, exact_mixing_time, mixing_times
from mixlab.errors import EmptyStateSpace, ModelSpecError, ParseError, StateSpaceTooLarge
from mixlab.zoo import (
    Bipartite,
    ModelSpec,
    complete_graph,
    cycle_graph,
    glauber_beta,
    is_proper,
    model,
    parse_graph_text,
    parse_poset_text,
    position_weights,
    swap_positions,
    theoretical_bounds,
)

fs = frozenset


# ---------------------------------------------------------------- hand enumerations

def test_knapsack_two_items():
    ch = model("knapsack", a=(1, 1), b=1).chain
    assert set(ch.states) == {fs(), fs({1}), fs({2})}
    e, one, two = ch.index_of(fs()), ch.index_of(fs({1})), ch.index_of(fs({2}))
    assert ch.P(e, one) == ch.P(e, two) == F(1, 4)
    assert ch.P(one, e) == F(1, 4) and ch.P(one, one) == F(3, 4)
    assert all(p == F(1, 3) for p in ch.pi)


def test_dumbbell_six():
    ch = model("dumbbell", n=6).chain
    assert list(ch.pi) == [F(1, 4), F(1, 4)] + [F(1, 8)] * 4


def test_js_two_by_two():
    ch = model("js_matchings", graph=Bipartite.complete(2, 2)).chain
    assert ch.n_states == 6
    assert sum(len(M) == 2 for M in ch.states) == 2
    assert all(ch.P(i, i) >= F(1, 2) for i in range(6))


def test_antichain_of_three():
    ch = model("linear_extensions", n=3).chain
    assert ch.n_states == 6
    J = position_weights(3)
    assert J[1] == J[2] == F(1, 2)


def test_bernoulli_laplace_states():
    ch = model("bernoulli_laplace", n=5, k=2).chain
    assert ch.n_states == 10
    assert all(len(s) == 2 for s in ch.states)


# ---------------------------------------------------------------- invariants

ZOO = [
    ("knapsack", dict(a=(2, 1, 3, 1), b=4)),
    ("bernoulli_laplace", dict(n=5, k=2)),
    ("glauber_coloring", dict(graph=cycle_graph(4), k=3)),
    ("bounded_subsets", dict(n=5, k=2)),
    ("linear_extensions", dict(n=4, relations=[(1, 3)])),
    ("js_matchings", dict(graph=Bipartite.complete(3, 3))),
    ("dumbbell", dict(n=8)),
]


@pytest.mark.parametrize("mid,params", ZOO)
def test_zoo_chain_is_reversible_and_uniform_where_expected(mid, params):
    m = model(mid, **params)
    ch = m.chain
    check_reversibility(ch.restricted() if mid == "glauber_coloring" else ch)
    support = ch.support
    if mid == "dumbbell":
        return
    vals = {ch.pi[i] for i in support}
    assert len(vals) == 1


def test_knapsack_moves_are_one_over_2n():
    m = model("knapsack", a=(3, 1, 2, 2, 1), b=5)
    ch = m.chain
    for x in range(ch.n_states):
        for y, p in ch.rows[x].items():
            if x != y:
                assert p == F(1, 10)
                assert len(ch.states[x] ^ ch.states[y]) == 1


def test_glauber_proper_colorings_are_closed():
    g = cycle_graph(4)
    m = model("glauber_coloring", graph=g, k=3)
    ch = m.chain
    for x in range(ch.n_states):
        if is_proper(g, ch.states[x]):
            assert all(is_proper(g, ch.states[y]) for y in ch.rows[x])
            assert ch.pi[x] > 0
        else:
            assert ch.pi[x] == 0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_position_weights_normalize(n):
    J = position_weights(n)
    assert sum(J[p] for p in range(1, n)) == 1
    assert J[0] == J[n] == 0
    zeta = F(6, n**3 - n)
    assert all(J[p] == zeta * p * (n - p) for p in range(1, n))


@pytest.mark.parametrize("rel", [[], [(1, 2)], [(1, 3), (2, 4)], [(1, 2), (2, 3), (3, 4), (4, 5)], [(1, 5), (2, 5)]])
def test_linear_extensions_closed_under_used_transpositions(rel):
    n = 5
    m = model("linear_extensions", n=n, relations=rel)
    valid = set(m.chain.states)
    less = {(a, b) for a, b in rel}
    # brute force oracle for the state space
    brute = {w for w in permutations(range(1, n + 1))
             if all(w.index(a) < w.index(b) for a, b in less)}
    assert valid == brute
    for g in valid:
        for i in range(1, n):
            h = swap_positions(g, i, i + 1)
            # an adjacent swap is either valid or swaps a comparable pair
            assert h in valid or (g[i - 1], g[i]) in less or any(
                (g[i - 1], g[i]) == pair for pair in _closure(less))


def _closure(less):
    out = set(less)
    changed = True
    while changed:
        changed = False
        for a, b in list(out):
            for c, d in list(out):
                if b == c and (a, d) not in out:
                    out.add((a, d))
                    changed = True
    return out


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=6), st.integers(0, 12))
def test_knapsack_state_space(a, b):
    m = model("knapsack", a=a, b=b)
    n = len(a)
    brute = {fs(i + 1 for i in range(n) if mask >> i & 1) for mask in range(1 << n)}
    brute = {s for s in brute if sum(a[i - 1] for i in s) <= b}
    assert set(m.chain.states) == brute


# ---------------------------------------------------------------- errors

def test_model_errors():
    with pytest.raises(ModelSpecError):
        ModelSpec("nope")
    with pytest.raises(ModelSpecError):
        model("bernoulli_laplace", n=4, k=3)
    with pytest.raises(ModelSpecError):
        model("dumbbell", n=7)
    with pytest.raises(ModelSpecError):
        model("linear_extensions", n=3, relations=[(1, 2), (2, 1)])
    with pytest.raises(EmptyStateSpace):
        model("glauber_coloring", graph=complete_graph(3), k=2)
    with pytest.raises(StateSpaceTooLarge):
        model("bounded_subsets", n=12, k=6, max_states=100)


def test_graph_and_poset_files():
    g = parse_graph_text("# triangle\ne 1 2\ne 2 3\ne 1 3\n")
    assert g == complete_graph(3)
    assert parse_poset_text("lt 1 2\nlt 2 3\n") == [(1, 2), (2, 3)]
    with pytest.raises(ParseError) as ei:
        parse_graph_text("e 1 2\nedge 2 3\n")
    assert ei.value.line == 2
    with pytest.raises(ParseError):
        parse_poset_text("lt a b\n")


# ---------------------------------------------------------------- closed-form bounds

def test_glauber_triangle_beta():
    tb = theoretical_bounds(ModelSpec("glauber_coloring", {"graph": complete_graph(3), "k": 5}), 0.25)
    assert tb["beta"] == F(14, 15)
    assert tb["beta"] == glauber_beta(complete_graph(3), 5)[0]
    assert tb["tau_bound"] == pytest.approx(math.log(3 / 0.25) * 15)


def test_bernoulli_laplace_bound_value():
    tb = theoretical_bounds(ModelSpec("bernoulli_laplace", {"n": 4, "k": 2}), 0.25)
    assert tb["tau_bound"] == pytest.approx(2 * math.log(16))
    assert math.ceil(tb["tau_bound"]) == 6


def test_linear_extensions_zeta():
    tb = theoretical_bounds(ModelSpec("linear_extensions", {"n": 4}), 0.25)
    assert tb["zeta"] == F(1, 10)


def test_not_applicable_is_data():
    tb = theoretical_bounds(ModelSpec("glauber_coloring", {"graph": complete_graph(3), "k": 4}), 0.25)
    assert any(na.bound == "k > 2 Delta" for na in tb.not_applicable)
    tb = theoretical_bounds(ModelSpec("js_matchings", {"graph": Bipartite.complete(2, 2)}), 0.25)
    assert tb.get("tau_bound") is None and tb.not_applicable


@pytest.mark.parametrize("mid,params", [
    ("bernoulli_laplace", dict(n=4, k=2)),
    ("bernoulli_laplace", dict(n=6, k=3)),
    ("glauber_coloring", dict(graph=complete_graph(3), k=5)),
    ("bounded_subsets", dict(n=4, k=2)),
    ("bounded_subsets", dict(n=6, k=3)),
    ("linear_extensions", dict(n=4)),
])
def test_exact_mixing_within_stated_bounds(mid, params):
    m = model(mid, **params)
    tb = theoretical_bounds(m.spec, 0.25)
    ch = m.chain.restricted() if mid == "glauber_coloring" else m.chain
    taus = mixing_times(ch, 0.25)
    assert taus.max() <= tb["tau_bound"]
    assert exact_mixing_time(ch, int(taus.argmax()), F(1, 4), exact=True) == taus.max()
