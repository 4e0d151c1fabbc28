"""Layer decomposition of matching pairs by |M xor N| and the drift of a coupling across layers."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import DistanceJumpViolation
from .strategy import CouplingStrategy

TOP, BOTTOM = "top", "bottom"
MAX_JUMP = 4


def unmatched(M: frozenset, n1: int, n2: int) -> tuple[frozenset, frozenset]:
    left = frozenset(range(n1)) - {u for u, _ in M}
    right = frozenset(range(n2)) - {v for _, v in M}
    return left, right


def pair_class(M: frozenset, N: frozenset, perfect: int, n1: int, n2: int) -> str:
    """TOP when both are perfect, or both near-perfect with the same holes; BOTTOM otherwise."""
    if len(M) == perfect and len(N) == perfect:
        return TOP
    if len(M) == len(N) and unmatched(M, n1, n2) == unmatched(N, n1, n2):
        return TOP
    return BOTTOM


@dataclass
class LayerRow:
    layer: int
    cls: str
    pairs: int = 0
    mass_left: Fraction = Fraction(0)
    mass_lateral: Fraction = Fraction(0)
    mass_right: Fraction = Fraction(0)

    def means(self) -> tuple[Fraction, Fraction, Fraction]:
        """Average one-step probabilities of moving down, staying, moving up."""
        k = self.pairs or 1
        return self.mass_left / k, self.mass_lateral / k, self.mass_right / k


@dataclass
class LayerReport:
    n: int  # vertices per side (the smaller side for unbalanced graphs)
    m: int  # edges
    alpha: float
    rows: dict = field(default_factory=dict)  # (layer, cls) -> LayerRow
    max_jump: int = 0
    pair_class: dict = field(default_factory=dict)  # (x, y) -> (layer, cls)

    def p_formula(self, i: int) -> float:
        return (self.alpha * self.n / 2 - i - 2) / (2 * self.m)

    def q_formula(self, i: int) -> float:
        return 5 * (i + 1) / (2 * self.m)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("layer,class,mass_left,mass_lateral,mass_right\n")
        for key in sorted(self.rows):
            r = self.rows[key]
            left, lat, right = r.means()
            out.write(f"{r.layer},{r.cls},{left},{lat},{right}\n")
        return out.getvalue()


def kr_layer_drift(cs: CouplingStrategy, graph, alpha: float = 1.0) -> LayerReport:
    """Classify every pair of matchings and tally the exact one-step layer moves.

    Tallies are exact: each pair contributes its joint law, split by the sign
    of the change in |M xor N|. A change larger than 4 raises
    DistanceJumpViolation with the offending tokens.
    """
    ch = cs.chain
    n1, n2 = graph.n1, graph.n2
    perfect = min(n1, n2)
    report = LayerReport(n=perfect, m=len(graph.edges), alpha=alpha)
    states = ch.states
    for x in range(ch.n_states):
        for y in range(ch.n_states):
            if x == y:
                continue
            M, N = states[x], states[y]
            layer = len(M ^ N)
            cls = pair_class(M, N, perfect, n1, n2)
            report.pair_class[(x, y)] = (layer, cls)
            row = report.rows.setdefault((layer, cls), LayerRow(layer, cls))
            row.pairs += 1
            for tok, p in cs.randomness(x, y):
                if not p:
                    continue
                a, b = cs.joint_step(x, y, tok)
                d = len(states[a] ^ states[b]) - layer
                if abs(d) > MAX_JUMP:
                    raise DistanceJumpViolation(
                        f"pair ({x}, {y}) jumps by {d} under token {tok!r}", pair=(x, y), tokens=[tok], jump=d
                    )
                report.max_jump = max(report.max_jump, abs(d))
                if d < 0:
                    row.mass_left += p
                elif d > 0:
                    row.mass_right += p
                else:
                    row.mass_lateral += p
    return report


def submartingale_bound(Z0: float, Delta: float, M: float, R: float, t: float) -> float:
    """exp(-M Z0 / Delta^2) + t exp(-M (R - Delta) / Delta^2), a bound on Pr[T <= t]."""
    if Delta <= 0 or M <= 0 or t < 0:
        raise ValueError("need Delta > 0, M > 0 and t >= 0")
    d2 = Delta * Delta
    return math.exp(-M * Z0 / d2) + t * math.exp(-M * (R - Delta) / d2)
