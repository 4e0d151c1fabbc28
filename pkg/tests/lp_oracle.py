"""Independent LP oracle: one commodity per ordered pair, solved by scipy HiGHS."""

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import lil_matrix

def pair_lp(chain):
    """Per-pair commodity arc LP solved by HiGHS."""
    n = chain.n_states
    edges = [(x, y) for x in range(n) for y in chain.rows[x] if y != x]
    E = len(edges)
    pi = chain.pi_float
    pairs = [(x, y) for x in range(n) for y in range(n) if x != y]
    nv = len(pairs) * E + 1
    A_eq = lil_matrix((len(pairs) * n, nv)); b_eq = []
    r = 0
    for k, (s, t) in enumerate(pairs):
        for v in range(n):
            for j, (a, b) in enumerate(edges):
                if b == v: A_eq[r, k * E + j] += 1
                if a == v: A_eq[r, k * E + j] -= 1
            b_eq.append(1.0 if v == t else (-1.0 if v == s else 0.0))
            r += 1
    A_ub = lil_matrix((E, nv))
    for j, (a, b) in enumerate(edges):
        for k, (s, t) in enumerate(pairs):
            A_ub[j, k * E + j] = pi[s] * pi[t]
        A_ub[j, nv - 1] = -pi[a] * float(chain.P(a, b))
    c = np.zeros(nv); c[-1] = 1
    res = linprog(c, A_ub=A_ub.tocsr(), b_ub=np.zeros(E), A_eq=A_eq.tocsr(), b_eq=b_eq, bounds=(0, None), method="highs")
    return res.fun
