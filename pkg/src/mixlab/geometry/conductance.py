"""Exact conductance by exhaustive subset enumeration, and the Cheeger sandwich."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from ..chain import Chain
from ..errors import CheegerViolation, TooLarge
from ..spectral import eigen_spectrum

MAX_SUBSET_STATES = 24
_INT_LIMIT = 2**52
_BLOCK = 1 << 18


def _integer_scale(chain: Chain):
    """Common denominator L with pi*L and Q*L integral, or None if too large for int64."""
    fracs = list(chain.pi)
    for x, row in enumerate(chain.rows):
        fracs.extend(chain.pi[x] * p for y, p in row.items() if y != x)
    L = 1
    for f in fracs:
        L = L * f.denominator // math.gcd(L, f.denominator)
        if L > _INT_LIMIT:
            return None
    n = chain.n_states
    if L * n * n > _INT_LIMIT:
        return None
    return L


def _bits(masks: np.ndarray, width: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(width)) & 1).astype(np.int64)


def _conductance_int(chain: Chain, L: int) -> tuple[Fraction, int]:
    n = chain.n_states
    pi = np.array([int(p * L) for p in chain.pi], dtype=np.int64)
    W = np.zeros((n, n), dtype=np.int64)
    for x, row in enumerate(chain.rows):
        for y, p in row.items():
            if y != x:
                W[x, y] = int(chain.pi[x] * p * L)
    deg = W.sum(axis=1)
    half = L  # compare 2 * pi(S) <= L

    na = n // 2
    nb = n - na
    ma = np.arange(1 << na, dtype=np.int64)
    mb = np.arange(1 << nb, dtype=np.int64)
    ba = _bits(ma, na)  # (2^na, na)
    bb = _bits(mb, nb)
    Waa, Wab, Wbb = W[:na, :na], W[:na, na:], W[na:, na:]
    pi_a, pi_b = ba @ pi[:na], bb @ pi[na:]
    # cut(S) = deg(S) - internal(S); internal counts ordered pairs inside S
    cut_a = ba @ deg[:na] - np.einsum("ij,jk,ik->i", ba, Waa, ba)
    cut_b = bb @ deg[na:] - np.einsum("ij,jk,ik->i", bb, Wbb, bb)
    cross_a = ba @ Wab  # (2^na, nb): weight from S_A to each B vertex

    best: Fraction | None = None
    best_mask = -1
    rows_per_block = max(1, _BLOCK // len(mb))
    for start in range(0, len(ma), rows_per_block):
        sl = slice(start, start + rows_per_block)
        cut = cut_a[sl, None] + cut_b[None, :] - 2 * (cross_a[sl] @ bb.T)
        mass = pi_a[sl, None] + pi_b[None, :]
        ok = (mass > 0) & (2 * mass <= half)
        if not ok.any():
            continue
        ratio = np.where(ok, cut / np.where(ok, mass, 1), np.inf)
        fmin = ratio.min()
        if best is not None and fmin > float(best) * (1 + 1e-9):
            continue
        ia, ib = np.nonzero(ratio <= fmin * (1 + 1e-9) + 1e-300)
        c, m = cut[ia, ib], mass[ia, ib]
        g = np.gcd(c, m)
        reduced = np.stack([c // g, m // g], axis=1)
        uniq = np.unique(reduced, axis=0)
        cand = min(Fraction(int(a), int(b)) for a, b in uniq)
        hit = (reduced[:, 0] == cand.numerator) & (reduced[:, 1] == cand.denominator)
        masks = ma[start + ia[hit]] | (mb[ib[hit]] << na)
        mask = int(masks.min())
        if best is None or cand < best or (cand == best and mask < best_mask):
            best, best_mask = cand, mask
    return best, best_mask


def _conductance_fraction(chain: Chain) -> tuple[Fraction, int]:
    n = chain.n_states
    best, best_mask = None, -1
    for size in range(1, n):
        for S in combinations(range(n), size):
            mass = sum((chain.pi[x] for x in S), Fraction(0))
            if mass > Fraction(1, 2):
                continue
            inside = set(S)
            cut = sum((chain.Q(x, y) for x in S for y in chain.rows[x] if y not in inside), Fraction(0))
            val = cut / mass
            mask = sum(1 << x for x in S)
            if best is None or val < best or (val == best and mask < best_mask):
                best, best_mask = val, mask
    return best, best_mask


def conductance_exact(chain: Chain, max_states: int = MAX_SUBSET_STATES) -> tuple[Fraction, frozenset]:
    """Phi = min over S with 0 < pi(S) <= 1/2 of Q(S, S^c) / pi(S), with a minimizing S.

    The witness is the minimizer with the smallest bitmask (state i is bit i).
    """
    ch = chain.restricted()
    n = ch.n_states
    if n > max_states:
        raise TooLarge(f"{n} states exceed the subset-enumeration cap {max_states}", n=n)
    if n < 2:
        raise ValueError("conductance needs at least two states")
    L = _integer_scale(ch)
    if L is not None:
        phi, mask = _conductance_int(ch, L)
    elif n <= 16:
        phi, mask = _conductance_fraction(ch)
    else:
        raise TooLarge("denominators too large for exact enumeration at this size", n=n)
    # indices of the restricted chain map back through the support
    witness = frozenset(chain.support[i] for i in range(n) if mask >> i & 1)
    return phi, witness


@dataclass(frozen=True)
class CheegerReport:
    phi: Fraction
    lambda1: float
    lower: float  # 1 - 2 Phi
    upper: float  # 1 - Phi^2 / 2
    slack_lower: float
    slack_upper: float


def cheeger_check(chain: Chain, tol: float = 1e-9, max_states: int = MAX_SUBSET_STATES) -> CheegerReport:
    """Verify 1 - 2 Phi <= lambda_1 <= 1 - Phi^2/2; a violation raises CheegerViolation."""
    phi, _ = conductance_exact(chain, max_states=max_states)
    lam1 = eigen_spectrum(chain).lambda1
    lower = float(1 - 2 * phi)
    upper = float(1 - phi * phi / 2)
    rep = CheegerReport(phi, lam1, lower, upper, lam1 - lower, upper - lam1)
    if rep.slack_lower < -tol or rep.slack_upper < -tol:
        raise CheegerViolation(
            f"Cheeger sandwich fails: {lower} <= {lam1} <= {upper} is false",
            phi=str(phi),
            lambda1=lam1,
        )
    return rep
