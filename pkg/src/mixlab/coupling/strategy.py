"""Markovian couplings with explicit finite randomness, checked in exact arithmetic."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable

from ..chain import Chain
from ..errors import NotFaithful

Token = Hashable


@dataclass
class CouplingStrategy:
    """A joint move (x, y, token) -> (x', y') driven by a finite token distribution.

    States are chain indices. ``randomness(x, y)`` lists (token, probability)
    pairs; probabilities are exact rationals summing to one.
    """

    chain: Chain
    joint_step: Callable[[int, int, Token], tuple[int, int]]
    randomness: Callable[[int, int], list[tuple[Token, Fraction]]]
    name: str = "coupling"
    history_policy: str = "memoryless"
    _cache: dict = field(default_factory=dict, repr=False)

    def joint_law(self, x: int, y: int) -> dict[tuple[int, int], Fraction]:
        key = (x, y)
        law = self._cache.get(key)
        if law is None:
            law = {}
            for tok, p in self.randomness(x, y):
                if p:
                    out = self.joint_step(x, y, tok)
                    law[out] = law.get(out, Fraction(0)) + p
            self._cache[key] = law
        return law


@dataclass(frozen=True)
class FaithfulReport:
    coupling: str
    pairs_checked: int


def _all_pairs(chain: Chain):
    n = chain.n_states
    return [(x, y) for x in range(n) for y in range(n)]


def verify_faithful(cs: CouplingStrategy, pairs: Iterable | None = None) -> FaithfulReport:
    """Both marginals of every joint law must equal the chain's rows exactly."""
    ch = cs.chain
    pairs = _all_pairs(ch) if pairs is None else list(pairs)
    for x, y in pairs:
        total = sum((p for _, p in cs.randomness(x, y)), Fraction(0))
        if total != 1:
            raise NotFaithful(f"token probabilities for ({x}, {y}) sum to {total}",
                              x=x, y=y, side="tokens", state=None, got=str(total), want="1")
        law = cs.joint_law(x, y)
        mx: dict = {}
        my: dict = {}
        for (a, b), p in law.items():
            mx[a] = mx.get(a, Fraction(0)) + p
            my[b] = my.get(b, Fraction(0)) + p
            if x == y and a != b:
                raise NotFaithful(f"coupled pair ({x}, {x}) separates to ({a}, {b})",
                                  x=x, y=y, side="diagonal", state=(a, b), got=str(p), want="0")
        for side, src, marg in (("x", x, mx), ("y", y, my)):
            row = ch.rows[src]
            for s in sorted(set(row) | set(marg)):
                got, want = marg.get(s, Fraction(0)), row.get(s, Fraction(0))
                if got != want:
                    raise NotFaithful(
                        f"{side}-marginal of ({x}, {y}) gives state {s} mass {got}, chain says {want}",
                        x=x, y=y, side=side, state=s, got=str(got), want=str(want),
                    )
    return FaithfulReport(cs.name, len(pairs))


def expected_one_step_distance(cs: CouplingStrategy, x: int, y: int, metric) -> Fraction:
    """Sum over the joint law of probability times metric(x', y'), exactly."""
    total = Fraction(0)
    for (a, b), p in cs.joint_law(x, y).items():
        total += p * metric(a, b)
    return total


def independent_coupling(chain: Chain) -> CouplingStrategy:
    """Independent moves for distinct states; identical moves once coupled."""

    def randomness(x, y):
        if x == y:
            return [((a, a), p) for a, p in sorted(chain.rows[x].items())]
        return [((a, b), p * q) for a, p in sorted(chain.rows[x].items()) for b, q in sorted(chain.rows[y].items())]

    return CouplingStrategy(chain, lambda x, y, tok: tok, randomness, name="independent")
