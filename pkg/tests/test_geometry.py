from fractions import Fraction as F
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.errors import InvalidPath, ParseError, TooLarge, WeightSumError
from mixlab.geometry import (
    CanonicalPathSet,
    FractionalFlow,
    cheeger_check,
    conductance_exact,
    congestion_csv,
    congestion_gap_bounds,
    dump_flow,
    flow_congestion,
    loop_erase,
    parse_flow,
    parse_paths,
    path_congestion,
    random_path_set,
    shortest_path_set,
)
from mixlab.spectral import eigen_spectrum
from mixlab.zoo import Bipartite, model


def brute_conductance(ch):
    """Plain enumeration over all subsets with Fractions."""
    n = ch.n_states
    best = None
    for k in range(1, n):
        for S in combinations(range(n), k):
            mass = sum(ch.pi[x] for x in S)
            if mass > F(1, 2):
                continue
            cut = sum(ch.pi[x] * ch.P(x, y) for x in S for y in range(n) if y not in S)
            best = cut / mass if best is None else min(best, cut / mass)
    return best


ZOO_SMALL = [
    ("dumbbell", dict(n=6)),
    ("dumbbell", dict(n=8)),
    ("dumbbell", dict(n=10)),
    ("knapsack", dict(a=[1, 1, 1], b=2)),
    ("bernoulli_laplace", dict(n=4, k=2)),
    ("bounded_subsets", dict(n=4, k=2)),
    ("js_matchings", dict(graph=Bipartite.complete(2, 2))),
    ("js_matchings", dict(graph=Bipartite.complete(2, 3))),
]


def test_conductance_small_examples(two_state, lazy_k4):
    assert conductance_exact(two_state) == (F(1, 2), frozenset({0}))
    phi, witness = conductance_exact(lazy_k4)
    assert phi == F(1, 3)
    assert len(witness) == 2


@pytest.mark.parametrize("mid,kw", ZOO_SMALL)
def test_conductance_matches_brute_force(mid, kw):
    ch = model(mid, **kw).chain
    phi, witness = conductance_exact(ch)
    assert phi == brute_conductance(ch)
    mass = sum(ch.pi[x] for x in witness)
    cut = sum(ch.Q(x, y) for x in witness for y in range(ch.n_states) if y not in witness)
    assert 0 < mass <= F(1, 2) and cut / mass == phi


def test_dumbbell_conductance_lazy_value():
    # the 1/2 holding halves every edge weight, so the half-split cut gives 1/4
    ch = model("dumbbell", n=10).chain
    assert ch.Q(0, 2) == F(1, 64)
    assert conductance_exact(ch)[0] == F(1, 4)


def test_conductance_too_large():
    ch = model("bernoulli_laplace", n=6, k=3).chain
    with pytest.raises(TooLarge):
        conductance_exact(ch, max_states=10)


def test_conductance_on_glauber_uses_proper_states():
    m = model("glauber_coloring", graph=[(1, 2)], k=3)
    phi, witness = conductance_exact(m.chain)
    assert phi > 0
    assert all(m.chain.pi[x] > 0 for x in witness)


@pytest.mark.parametrize("mid,kw", ZOO_SMALL)
def test_cheeger_sandwich(mid, kw):
    rep = cheeger_check(model(mid, **kw).chain)
    assert rep.slack_lower >= -1e-9 and rep.slack_upper >= -1e-9


def test_cheeger_examples(two_state, lazy_k4):
    rep = cheeger_check(lazy_k4)
    assert abs(rep.slack_lower) < 1e-9
    rep = cheeger_check(two_state)
    assert abs(rep.lambda1) < 1e-12 and rep.upper == 7 / 8


def test_loop_erase():
    assert loop_erase([0, 1, 2, 1, 3]) == (0, 1, 3)
    assert loop_erase([0, 1, 0, 2]) == (0, 2)
    assert loop_erase([5]) == (5,)


def test_path_congestion_examples(two_state, lazy_k4):
    rep = path_congestion(two_state, CanonicalPathSet({(0, 1): (0, 1), (1, 0): (1, 0)}))
    assert rep.rho == 1 and rep.rho_bar == 1 and rep.ell == 1
    assert congestion_gap_bounds(rep) == (F(1, 2), F(7, 8), 0, 0)
    rep = path_congestion(lazy_k4, shortest_path_set(lazy_k4))
    assert rep.rho == F(3, 2) and rep.ell == 1
    assert abs(congestion_gap_bounds(rep)[3] - eigen_spectrum(lazy_k4).lambda1) < 1e-12


def test_invalid_paths(lazy_k4):
    gamma = shortest_path_set(lazy_k4)
    broken = dict(gamma.paths)
    del broken[(2, 3)]
    with pytest.raises(InvalidPath):
        path_congestion(lazy_k4, CanonicalPathSet(broken))
    ch = model("dumbbell", n=6).chain
    gamma = shortest_path_set(ch)
    gamma.paths[(2, 3)] = (2, 3)  # two middle vertices are not adjacent
    with pytest.raises(InvalidPath) as err:
        path_congestion(ch, gamma)
    assert err.value.detail["edge"] == (2, 3)


def test_dumbbell_hub_pair_forces_congestion():
    ch = model("dumbbell", n=10).chain
    base = shortest_path_set(ch)
    for m in range(2, 10):
        gamma = CanonicalPathSet(dict(base.paths))
        gamma.paths[(0, 1)] = (0, m, 1)
        rep = path_congestion(ch, gamma)
        floor = ch.pi[0] * ch.pi[1] / ch.Q(0, m)
        assert floor == 4
        assert rep.rho >= floor >= 2


def test_dumbbell_random_path_sets():
    ch = model("dumbbell", n=10).chain
    rng = np.random.default_rng(5)
    lam1 = eigen_spectrum(ch).lambda1
    for _ in range(30):
        rep = path_congestion(ch, random_path_set(ch, rng))
        assert rep.rho >= 2
    assert 1 / (1 - lam1) <= 8 + 1e-9


def spread_flow_k28(ch):
    """(1,2) and (2,1) split evenly over all middles; middle pairs go through hub 1."""
    routes = {}
    n = ch.n_states
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            if {x, y} == {0, 1}:
                routes[(x, y)] = [((x, m, y), F(1, 8)) for m in range(2, n)]
            elif ch.P(x, y):
                routes[(x, y)] = [((x, y), F(1))]
            else:
                routes[(x, y)] = [((x, 0, y), F(1))]
    return FractionalFlow(routes)


def dense_congestion(ch, flow):
    """Independent oracle: accumulate loads into a dense matrix and divide by Q."""
    pi = ch.pi_float
    load = np.zeros((ch.n_states, ch.n_states))
    for (x, y), rs in flow.routes.items():
        for p, w in rs:
            for u, v in zip(p, p[1:]):
                load[u, v] += pi[x] * pi[y] * float(w)
    Q = pi[:, None] * ch.dense
    mask = load > 0
    return (load[mask] / Q[mask]).max()


def test_spread_flow_beats_single_paths():
    ch = model("dumbbell", n=10).chain
    flow = spread_flow_k28(ch)
    rep = flow_congestion(ch, flow)
    assert rep.rho == F(13, 4)  # golden, frozen from the dense oracle below
    assert abs(dense_congestion(ch, flow) - 13 / 4) < 1e-12
    assert rep.ell == 2
    # any single path for (1,2) already costs 4 on its first edge
    assert rep.rho < 4


def test_flow_matches_path_congestion(lazy_k4):
    gamma = shortest_path_set(lazy_k4)
    assert flow_congestion(lazy_k4, gamma.as_flow()) == path_congestion(lazy_k4, gamma)


def test_flow_weight_errors(lazy_k4):
    flow = shortest_path_set(lazy_k4).as_flow()
    flow.routes[(0, 1)] = []
    with pytest.raises(WeightSumError):
        flow_congestion(lazy_k4, flow)
    flow.routes[(0, 1)] = [((0, 1), F(1, 2))]
    with pytest.raises(WeightSumError):
        flow_congestion(lazy_k4, flow)
    flow.routes[(0, 1)] = [((0, 1), 0.5), ((0, 2, 1), 0.5 + 1e-14)]
    assert flow_congestion(lazy_k4, flow).rho > 0


def test_float_flow_is_float(lazy_k4):
    flow = shortest_path_set(lazy_k4).as_flow()
    flow.routes[(0, 1)] = [((0, 1), 0.25), ((0, 2, 1), 0.75)]
    rep = flow_congestion(lazy_k4, flow)
    assert isinstance(rep.rho, float)
    assert abs(rep.rho - dense_congestion(lazy_k4, flow)) < 1e-12


def test_dump_parse_round_trip():
    ch = model("dumbbell", n=10).chain
    flow = spread_flow_k28(ch)
    again = parse_flow(dump_flow(flow))
    assert flow_congestion(ch, again) == flow_congestion(ch, flow)
    gamma = shortest_path_set(ch)
    assert parse_paths(dump_flow(gamma)).paths == gamma.paths
    with pytest.raises(WeightSumError):
        parse_paths(dump_flow(flow))
    with pytest.raises(ParseError):
        parse_flow("path 0 1 1/1\n")


def test_dump_float_weights_sum_to_one(lazy_k4):
    flow = shortest_path_set(lazy_k4).as_flow()
    flow.routes[(0, 1)] = [((0, 1), 0.1), ((0, 2, 1), 0.2), ((0, 3, 1), 0.7)]
    again = parse_flow(dump_flow(flow))
    assert sum(w for _, w in again.routes[(0, 1)]) == 1


def test_congestion_csv(lazy_k4):
    text = congestion_csv(path_congestion(lazy_k4, shortest_path_set(lazy_k4)))
    assert text.splitlines()[0] == "rho,rho_bar,ell,witness_edge"
    assert text.splitlines()[1].startswith("3/2,3/2,1,")


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(ZOO_SMALL[:6]), st.integers(0, 2**32 - 1))
def test_random_paths_bound_conductance_and_gap(case, seed):
    mid, kw = case
    ch = model(mid, **kw).chain
    rep = path_congestion(ch, random_path_set(ch, np.random.default_rng(seed)))
    phi_lb, lam_q, lam_bar, lam_len = congestion_gap_bounds(rep)
    assert rep.rho_bar >= rep.rho
    assert conductance_exact(ch)[0] >= phi_lb
    lam1 = eigen_spectrum(ch).lambda1
    for b in (lam_q, lam_bar, lam_len):
        assert lam1 <= float(b) + 1e-9
