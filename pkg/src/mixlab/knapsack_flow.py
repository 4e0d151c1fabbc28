"""Flow for the knapsack chain: heavy items, balanced orderings of the rest, and the path encoding.

Item sets are frozensets of 1-based item indices, as in the zoo's knapsack
model. Flow here is counted in units: every ordered pair sends one unit.
"""

from __future__ import annotations

import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import DecodeMismatch, InfeasiblePath, NoBalancedPermutation, TooManyItems
from .geometry.paths import FractionalFlow
from .zoo import Model, knapsack_tau_bound

DEFAULT_H = 29
MAX_PERM_ITEMS = 9
MAX_ITEMS = 10


@dataclass(frozen=True)
class Instance:
    a: tuple  # item sizes, a[i - 1] for item i
    b: Fraction

    @classmethod
    def from_model(cls, m: Model) -> "Instance":
        from .chain import as_fraction

        return cls(tuple(as_fraction(v) for v in m.spec.params["a"]), as_fraction(m.spec.params["b"]))

    @property
    def n(self) -> int:
        return len(self.a)

    def size(self, items) -> Fraction:
        return sum((self.a[i - 1] for i in items), Fraction(0))


@dataclass(frozen=True)
class HeavySplit:
    X: frozenset
    Y: frozenset
    H: frozenset
    S: tuple  # light items in index order; weights follow the same order
    w: tuple  # signed: + for items of Y, - for items of X
    aX: Fraction
    aY: Fraction
    aHX: Fraction
    aHY: Fraction

    @property
    def H_X(self) -> frozenset:
        return self.H & self.X

    @property
    def H_Y(self) -> frozenset:
        return self.H & self.Y

    @property
    def W(self) -> Fraction:
        return sum(self.w, Fraction(0))

    @property
    def M(self) -> Fraction:
        return max((abs(v) for v in self.w), default=Fraction(0))

    def window(self, slack: int = 0) -> tuple[Fraction, Fraction]:
        """Allowed prefix-sum range; ``slack`` widens only the lower side, by slack * M."""
        d = self.aY - self.aX
        return min(d, 0) - self.aHY - slack * self.M, max(d, 0) + self.aHX


def split_heavy(inst: Instance, X: frozenset, Y: frozenset, h: int = DEFAULT_H) -> HeavySplit:
    """H = the h largest items of X xor Y, ties broken by the smaller index."""
    diff = sorted(X ^ Y, key=lambda i: (-inst.a[i - 1], i))
    H = frozenset(diff[:h])
    S = tuple(sorted(diff[h:]))
    w = tuple(inst.a[i - 1] if i in Y else -inst.a[i - 1] for i in S)
    return HeavySplit(X, Y, H, S, w, inst.size(X), inst.size(Y), inst.size(H & X), inst.size(H & Y))


def is_l_balanced(w, sigma, ell: int) -> bool:
    """Every prefix sum lies in [min(W,0) - ell M, max(W,0) + ell M]."""
    W = sum(w, Fraction(0))
    M = max((abs(v) for v in w), default=Fraction(0))
    lo, hi = min(W, 0) - ell * M, max(W, 0) + ell * M
    s = Fraction(0)
    for i in sigma:
        s += w[i]
        if not lo <= s <= hi:
            return False
    return True


def balanced_permutations(split: HeavySplit, slack: int = 0) -> list[tuple]:
    """All orderings of the light items (positions into split.S) whose prefix sums stay in the window."""
    m = len(split.S)
    if m > MAX_PERM_ITEMS:
        raise TooManyItems(f"{m} light items; exhaustive orderings are limited to {MAX_PERM_ITEMS}", m=m)
    lo, hi = split.window(slack)
    w = split.w
    out: list[tuple] = []
    prefix: list[int] = []
    used = [False] * m

    def extend(s):
        if len(prefix) == m:
            out.append(tuple(prefix))
            return
        for i in range(m):
            if used[i]:
                continue
            t = s + w[i]
            if not lo <= t <= hi:
                continue
            used[i] = True
            prefix.append(i)
            extend(t)
            prefix.pop()
            used[i] = False

    extend(Fraction(0))
    if not out:
        raise NoBalancedPermutation(
            f"no ordering of {m} light items fits the window [{lo}, {hi}]",
            X=sorted(split.X), Y=sorted(split.Y), H=sorted(split.H), slack=slack,
        )
    return out


def uniformity(perms: list[tuple], m: int) -> float:
    """alpha = max over k, U of Pr[sigma{1..k} = U] * C(m, k), for sigma uniform over ``perms``."""
    if m == 0 or not perms:
        return 1.0
    best = 0.0
    for k in range(1, m + 1):
        counts = Counter(frozenset(p[:k]) for p in perms)
        best = max(best, max(counts.values()) / len(perms) * math.comb(m, k))
    return best


def path_for(inst: Instance, split: HeavySplit, sigma: tuple) -> tuple:
    """Walk from X to Y following sigma, using heavy items to keep the knapsack full."""
    X, Y, H = split.X, split.Y, split.H
    Z = set(X)
    load = split.aX
    path = [frozenset(Z)]
    heavy = sorted(H)

    def step(add=None, remove=None):
        nonlocal load
        if add is not None:
            Z.add(add)
            load += inst.a[add - 1]
        else:
            Z.discard(remove)
            load -= inst.a[remove - 1]
        if load > inst.b:
            raise InfeasiblePath(f"state {sorted(Z)} exceeds the capacity", pair=(sorted(X), sorted(Y)), step=len(path))
        path.append(frozenset(Z))

    for k in range(len(sigma)):
        item = split.S[sigma[k]]
        if split.w[sigma[k]] > 0:
            while load + inst.a[item - 1] > inst.b:
                H0 = [e for e in heavy if e in Z]
                if not H0:
                    raise InfeasiblePath(f"no heavy item left to make room for {item}",
                                         pair=(sorted(X), sorted(Y)), step=len(path))
                step(remove=H0[0])
            step(add=item)
        else:
            while True:
                room = [e for e in heavy if e not in Z and load + inst.a[e - 1] <= inst.b]
                if not room:
                    break
                step(add=room[0])
            step(remove=item)
    while frozenset(Z) != Y:
        room = [e for e in sorted(split.H_Y) if e not in Z and load + inst.a[e - 1] <= inst.b]
        if room:
            step(add=room[0])
            continue
        extra = [e for e in sorted(split.H_X) if e in Z]
        if not extra:
            raise InfeasiblePath("cannot complete the heavy items", pair=(sorted(X), sorted(Y)), step=len(path))
        step(remove=extra[0])
    return tuple(path)


# --------------------------------------------------------------------------
# encoding of (X, Y) given an intermediate state Z


@dataclass(frozen=True)
class FlowEncoding:
    Z_prime: frozenset
    h1: int | None
    h2: int | None
    U: frozenset
    H_prime: frozenset
    feasible: bool  # a(Z') <= b

    def key(self, Z: frozenset) -> tuple:
        return (Z, self.Z_prime, self.h1, self.h2, self.U, self.H_prime)


def _fill_pair(inst: Instance, Z: frozenset, H: frozenset, target: Fraction):
    """First (h1, h2) in lexicographic order, None before items, raising a(Z) to the target.

    When no pair reaches it (possible once the window's lower side is
    relaxed), the first pair of largest total is used.
    """
    free = sorted(H - Z)
    cands = [(None, None)] + [(None, e) for e in free] + list(combinations(free, 2))
    best, best_load = None, None
    for h1, h2 in cands:
        load = inst.size(Z | {e for e in (h1, h2) if e is not None})
        if load >= target:
            return h1, h2
        if best_load is None or load > best_load:
            best, best_load = (h1, h2), load
    return best


def encode_pair(inst: Instance, Z: frozenset, X: frozenset, Y: frozenset, h: int = DEFAULT_H) -> FlowEncoding:
    split = split_heavy(inst, X, Y, h)
    h1, h2 = _fill_pair(inst, Z, split.H, min(split.aX, split.aY))
    filled = Z | {e for e in (h1, h2) if e is not None}
    Zp = ((X ^ Y) - filled) | (X & Y)
    U = (Z ^ X) & frozenset(split.S)
    return FlowEncoding(Zp, h1, h2, U, split.H_X, inst.size(Zp) <= inst.b)


def decode(inst: Instance, Z: frozenset, enc: FlowEncoding, h: int = DEFAULT_H) -> tuple[frozenset, frozenset]:
    Zp = enc.Z_prime
    filled = Z | {e for e in (enc.h1, enc.h2) if e is not None}
    common = Z & Zp
    diff = Zp ^ filled
    order = sorted(diff, key=lambda i: (-inst.a[i - 1], i))
    H = frozenset(order[:h])
    S = diff - H
    U = enc.U
    X = (U & Zp) | ((S - U) & Z) | common | enc.H_prime
    Y = (U & Z) | ((S - U) & Zp) | common | (H - enc.H_prime)
    return X, Y


# --------------------------------------------------------------------------
# the flow


@dataclass
class KnapsackFlow:
    inst: Instance
    h: int
    states: tuple
    paths: dict  # (X, Y) -> list of (path of item sets, weight)
    slack: dict  # (X, Y) -> lower-side slack that was needed

    def as_fractional(self, chain) -> FractionalFlow:
        """The same flow on chain indices, in the geometry module's format."""
        routes = {}
        for (X, Y), ps in self.paths.items():
            routes[(chain.index_of(X), chain.index_of(Y))] = [
                (tuple(chain.index_of(Z) for Z in p), w) for p, w in ps
            ]
        return FractionalFlow(routes)


def build_flow(m: Model, h: int = DEFAULT_H) -> KnapsackFlow:
    """One path per balanced ordering for every ordered pair, equal weights.

    The window's lower side is widened by the smallest multiple of M that
    admits an ordering; the upper side, which guards feasibility, is never moved.
    """
    inst = Instance.from_model(m)
    if inst.n > MAX_ITEMS:
        raise TooManyItems(f"{inst.n} items; the flow construction is limited to {MAX_ITEMS}", n=inst.n)
    states = tuple(m.chain.states)
    paths, slack = {}, {}
    for X in states:
        for Y in states:
            if X == Y:
                continue
            split = split_heavy(inst, X, Y, h)
            ell = 0
            while True:
                try:
                    perms = balanced_permutations(split, ell)
                    break
                except NoBalancedPermutation:
                    if ell >= len(split.S):
                        raise
                    ell += 1
            counts = Counter(path_for(inst, split, s) for s in perms)
            total = len(perms)
            paths[(X, Y)] = [(p, Fraction(c, total)) for p, c in sorted(counts.items(), key=_path_key)]
            slack[(X, Y)] = ell
    return KnapsackFlow(inst, h, states, paths, slack)


def _path_key(item):
    p, _ = item
    return tuple(tuple(sorted(Z)) for Z in p)


@dataclass(frozen=True)
class FlowMetrics:
    C: Fraction  # max over states of the flow passing through it
    L: int  # longest path, in transitions
    size: int  # |Omega|
    tau_bound: float


def flow_metrics_and_bound(flow: KnapsackFlow, eps) -> FlowMetrics:
    through: dict = {}
    L = 0
    for ps in flow.paths.values():
        for p, w in ps:
            L = max(L, len(p) - 1)
            for Z in p:
                through[Z] = through.get(Z, Fraction(0)) + w
    C = max(through.values(), default=Fraction(0))
    size = len(flow.states)
    return FlowMetrics(C, L, size, knapsack_tau_bound(flow.inst.n, C, size, L, eps))


@dataclass(frozen=True)
class EncodingAudit:
    checked: int
    collisions: int
    infeasible_encodings: int  # Z' above capacity (only with a widened window)


def audit_encoding(flow: KnapsackFlow) -> EncodingAudit:
    """Encode every (X, Y, Z) on a flow path, decode it back, and look for shared codes."""
    seen: dict = {}
    checked = collisions = infeasible = 0
    for (X, Y), ps in flow.paths.items():
        on_path = {Z for p, _ in ps for Z in p}
        for Z in sorted(on_path, key=lambda s: tuple(sorted(s))):
            enc = encode_pair(flow.inst, Z, X, Y, flow.h)
            if decode(flow.inst, Z, enc, flow.h) != (X, Y):
                raise DecodeMismatch(f"decoding at {sorted(Z)} does not return the pair",
                                     X=sorted(X), Y=sorted(Y), Z=sorted(Z))
            key = enc.key(Z)
            prev = seen.setdefault(key, (X, Y))
            if prev != (X, Y):
                collisions += 1
            checked += 1
            infeasible += not enc.feasible
    return EncodingAudit(checked, collisions, infeasible)


def metrics_csv(metrics: FlowMetrics, audit: EncodingAudit | None = None) -> str:
    out = io.StringIO()
    out.write("C_f,L_f,omega,tau_bound")
    if audit:
        out.write(",encodings,collisions,infeasible_encodings")
    out.write("\n")
    out.write(f"{metrics.C},{metrics.L},{metrics.size},{metrics.tau_bound:.10g}")
    if audit:
        out.write(f",{audit.checked},{audit.collisions},{audit.infeasible_encodings}")
    out.write("\n")
    return out.getvalue()
