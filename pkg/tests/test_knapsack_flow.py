import math
from fractions import Fraction as F
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.chain import mixing_times
from mixlab.coupling import builtin_coupling, path_coupling_bound
from mixlab.errors import NoBalancedPermutation, TooManyItems
from mixlab.geometry import flow_congestion
from mixlab.geometry.paths import congestion_gap_bounds
from mixlab.knapsack_flow import (
    FlowEncoding,
    Instance,
    audit_encoding,
    balanced_permutations,
    build_flow,
    decode,
    encode_pair,
    flow_metrics_and_bound,
    is_l_balanced,
    metrics_csv,
    path_for,
    split_heavy,
    uniformity,
)
from mixlab.spectral import eigen_spectrum
from mixlab.zoo import model

fs = frozenset


def brute_balanced(split, slack=0):
    lo, hi = split.window(slack)
    out = []
    for sigma in permutations(range(len(split.S))):
        s, ok = F(0), True
        for i in sigma:
            s += split.w[i]
            ok &= lo <= s <= hi
        if ok:
            out.append(sigma)
    return sorted(out)


# ---------------------------------------------------------------- heavy split

def test_split_all_heavy_when_small():
    inst = Instance((F(1), F(2), F(3)), F(4))
    sp = split_heavy(inst, fs({1}), fs({2, 3}), h=29)
    assert sp.H == fs({1, 2, 3}) and sp.S == ()


def test_split_tie_broken_by_index():
    inst = Instance((F(3), F(3), F(1)), F(4))
    sp = split_heavy(inst, fs({1}), fs({2}), h=1)
    assert sp.H == fs({1}) and sp.S == (2,) and sp.w == (F(3),)


def test_split_equal_weights():
    inst = Instance((F(1),) * 5, F(3))
    sp = split_heavy(inst, fs({2, 4}), fs({1, 5}), h=2)
    assert sp.H == fs({1, 2})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=2, max_size=7), st.data())
def test_split_identity(a, data):
    n = len(a)
    inst = Instance(tuple(F(v) for v in a), F(sum(a)))
    X = fs(data.draw(st.sets(st.integers(1, n))))
    Y = fs(data.draw(st.sets(st.integers(1, n))))
    h = data.draw(st.integers(0, 4))
    sp = split_heavy(inst, X, Y, h)
    assert len(sp.H) == min(h, len(X ^ Y))
    assert not (set(sp.S) & sp.H)
    assert sp.W == sp.aY - sp.aX + sp.aHX - sp.aHY
    light = sorted(inst.a[i - 1] for i in sp.S)
    assert all(inst.a[i - 1] >= max(light, default=0) for i in sp.H)


# ---------------------------------------------------------------- balanced orderings

def test_empty_light_set():
    inst = Instance((F(1), F(1)), F(2))
    sp = split_heavy(inst, fs({1}), fs({2}), h=29)
    assert balanced_permutations(sp) == [()]


def test_single_light_item():
    inst = Instance((F(1), F(1)), F(2))
    sp = split_heavy(inst, fs({1}), fs({1, 2}), h=0)
    assert balanced_permutations(sp) == [(0,)]
    sp = split_heavy(inst, fs({1}), fs({2}), h=1)  # add 2 with H = {1}: prefix +1 within [0, 1]
    assert balanced_permutations(sp) == [(0,)]


def test_four_unit_items_need_the_lower_slack():
    inst = Instance((F(1),) * 4, F(2))
    sp = split_heavy(inst, fs({1, 2}), fs({3, 4}), h=0)
    assert sp.window(0) == (0, 0)
    with pytest.raises(NoBalancedPermutation):
        balanced_permutations(sp)
    perms = balanced_permutations(sp, slack=1)
    assert len(perms) == 4
    # each one removes an item of X first, then alternates
    assert all([sp.w[i] < 0 for i in p] == [True, False, True, False] for p in perms)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=6), st.data())
def test_enumeration_matches_brute_force(a, data):
    n = len(a)
    inst = Instance(tuple(F(v) for v in a), F(sum(a)))
    X = fs(data.draw(st.sets(st.integers(1, n))))
    Y = fs(data.draw(st.sets(st.integers(1, n))))
    h = data.draw(st.integers(0, 2))
    slack = data.draw(st.integers(0, 2))
    sp = split_heavy(inst, X, Y, h)
    want = brute_balanced(sp, slack)
    if want:
        assert sorted(balanced_permutations(sp, slack)) == want
    else:
        with pytest.raises(NoBalancedPermutation):
            balanced_permutations(sp, slack)


def test_too_many_light_items():
    inst = Instance((F(1),) * 10, F(10))
    sp = split_heavy(inst, fs(), fs(range(1, 11)), h=0)
    with pytest.raises(TooManyItems):
        balanced_permutations(sp)


def test_l_balanced_predicate():
    w = (F(-1), F(-1), F(1), F(1))
    assert is_l_balanced(w, (0, 2, 1, 3), 1)
    assert not is_l_balanced(w, (0, 1, 2, 3), 1)
    assert is_l_balanced(w, (0, 1, 2, 3), 2)


def test_uniformity_statistic():
    assert uniformity(list(permutations(range(4))), 4) == pytest.approx(1.0)
    # a single ordering pins every prefix set
    assert uniformity([(0, 1, 2)], 3) == pytest.approx(3.0)


# ---------------------------------------------------------------- flow paths

def check_paths(m, flow):
    inst = flow.inst
    ch = m.chain
    for (X, Y), ps in flow.paths.items():
        assert sum(w for _, w in ps) == 1
        for p, _ in ps:
            assert p[0] == X and p[-1] == Y
            assert len(set(p)) == len(p)
            for u, v in zip(p, p[1:]):
                assert len(u ^ v) == 1
                assert ch.P(ch.index_of(u), ch.index_of(v)) > 0
            assert all(inst.size(Z) <= inst.b for Z in p)


def test_single_addition_is_one_step():
    m = model("knapsack", a=(1, 2, 3), b=3)
    flow = build_flow(m)
    assert flow.paths[(fs({1}), fs({1, 2}))] == [((fs({1}), fs({1, 2})), 1)]


@pytest.mark.parametrize("h", [0, 1, 2, 29])
def test_three_unit_items(h):
    m = model("knapsack", a=(1, 1, 1), b=2)
    flow = build_flow(m, h)
    assert len(flow.paths) == 7 * 6
    check_paths(m, flow)
    for (X, Y), ps in flow.paths.items():
        H = split_heavy(flow.inst, X, Y, h).H
        assert all(len(p) - 1 <= len(X ^ Y) + 2 * len(H) for p, _ in ps)


def test_uniform_eight_items():
    m = model("knapsack", a=(1,) * 8, b=4)
    flow = build_flow(m)
    check_paths(m, flow)
    assert flow_metrics_and_bound(flow, 0.25).L <= 16


@pytest.mark.parametrize("a,b", [((3, 1, 2, 2), 4), ((5, 1, 1, 2, 3), 6)])
@pytest.mark.parametrize("h", [0, 2])
def test_mixed_sizes(a, b, h):
    m = model("knapsack", a=a, b=b)
    flow = build_flow(m, h)
    check_paths(m, flow)
    assert flow_metrics_and_bound(flow, 0.25).L <= 2 * len(a) + 2 * h


def test_path_keeps_heavy_items_in_play():
    inst = Instance((F(5), F(1), F(1)), F(6))
    X, Y = fs({1}), fs({2, 3})
    sp = split_heavy(inst, X, Y, h=1)
    (sigma,) = [s for s in balanced_permutations(sp, 1)][:1]
    path = path_for(inst, sp, sigma)
    assert path[0] == X and path[-1] == Y
    assert all(inst.size(Z) <= 6 for Z in path)


# ---------------------------------------------------------------- encoding

def test_encoding_at_path_start():
    inst = Instance((F(1),) * 3, F(2))
    X, Y = fs({1}), fs({2, 3})
    enc = encode_pair(inst, X, X, Y, h=29)
    assert enc.U == fs()
    assert decode(inst, X, enc, h=29) == (X, Y)


@pytest.mark.parametrize("h", [0, 1, 2, 29])
def test_round_trip_three_items(h):
    m = model("knapsack", a=(1, 1, 1), b=2)
    flow = build_flow(m, h)
    for (X, Y), ps in flow.paths.items():
        for p, _ in ps:
            for Z in p:
                enc = encode_pair(flow.inst, Z, X, Y, h)
                assert decode(flow.inst, Z, enc, h) == (X, Y)
                assert Z & enc.Z_prime == X & Y


@pytest.mark.parametrize("n,b,h", [(6, 3, 0), (6, 3, 2), (7, 3, 29), (8, 4, 29)])
def test_encoding_is_injective_on_uniform_instances(n, b, h):
    flow = build_flow(model("knapsack", a=(1,) * n, b=b), h)
    audit = audit_encoding(flow)
    assert audit.collisions == 0
    assert audit.checked > 0


def test_encoding_feasible_with_strict_window():
    # with H = X xor Y the window is never relaxed and every Z' fits
    flow = build_flow(model("knapsack", a=(2, 1, 3, 1, 2), b=4), 29)
    assert max(flow.slack.values()) == 0
    assert audit_encoding(flow).infeasible_encodings == 0


def test_encoding_key_shape():
    enc = FlowEncoding(fs({1}), None, 2, fs(), fs(), True)
    assert enc.key(fs({3})) == (fs({3}), fs({1}), None, 2, fs(), fs())


# ---------------------------------------------------------------- metrics and bound

def test_two_item_bound_dominates_exact():
    m = model("knapsack", a=(1, 1), b=1)
    mt = flow_metrics_and_bound(build_flow(m), 0.25)
    assert mt.L <= 2
    assert int(mixing_times(m.chain, 0.25).max()) <= mt.tau_bound


def test_bound_against_path_coupling_uniform():
    m = model("knapsack", a=(1,) * 8, b=4)
    mt = flow_metrics_and_bound(build_flow(m), 0.25)
    pc = path_coupling_bound(builtin_coupling(model("bounded_subsets", n=8, k=4)), 0.25)
    closed = 2 * 8 * math.log(2 * 4 / 0.25)
    assert pc <= math.ceil(closed)
    assert pc < mt.tau_bound


def test_eps_to_one_limit():
    m = model("knapsack", a=(1, 2, 1), b=2)
    flow = build_flow(m)
    mt = flow_metrics_and_bound(flow, 1 - 1e-12)
    n = 3
    assert mt.tau_bound == pytest.approx(2 * n * float(mt.C) / mt.size * mt.L * n, rel=1e-9)


@pytest.mark.parametrize("a,b,h", [((1, 1, 1), 2, 0), ((3, 1, 2, 2), 4, 2), ((1,) * 5, 2, 29)])
def test_flow_congestion_gives_spectral_bound(a, b, h):
    m = model("knapsack", a=a, b=b)
    flow = build_flow(m, h)
    rep = flow_congestion(m.chain, flow.as_fractional(m.chain))
    lam1 = eigen_spectrum(m.chain).lambda1
    assert lam1 <= float(congestion_gap_bounds(rep)[3]) + 1e-12
    # the state-based count dominates the edge congestion used by the bound
    mt = flow_metrics_and_bound(flow, 0.25)
    assert rep.rho <= 2 * len(a) * mt.C / mt.size
    assert rep.ell == mt.L


def test_metrics_csv():
    flow = build_flow(model("knapsack", a=(1, 1, 1), b=2))
    text = metrics_csv(flow_metrics_and_bound(flow, 0.25), audit_encoding(flow))
    head, row = text.strip().splitlines()
    assert head == "C_f,L_f,omega,tau_bound,encodings,collisions,infeasible_encodings"
    assert row.split(",")[:3] == ["18", "3", "7"]
