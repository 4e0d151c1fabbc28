"""Exception hierarchy.

Every error carries a short machine-readable ``kind`` (the class name) and a
``detail`` mapping so the CLI can serialize it to ``error.csv``.
"""

from __future__ import annotations


class MixlabError(Exception):
    """Base class; ``invariant`` errors map to CLI exit code 2."""

    invariant = True

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail

    @property
    def kind(self) -> str:
        return type(self).__name__


# chain_core
class RowSumError(MixlabError):
    pass


class NotIrreducible(MixlabError):
    pass


class NotAperiodic(MixlabError):
    pass


class NotReversible(MixlabError):
    pass


class LengthMismatch(MixlabError):
    pass


class Diverged(MixlabError):
    pass


class ParseError(MixlabError):
    def __init__(self, line: int, reason: str, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {reason}", line=line, column=column, reason=reason)
        self.line = line
        self.column = column
        self.reason = reason


# spectral
class DegenerateSpectrum(MixlabError):
    pass


class ConstantVector(MixlabError):
    pass


class TooLarge(MixlabError):
    pass


# geometry
class InvalidPath(MixlabError):
    pass


class WeightSumError(MixlabError):
    pass


class LPNumericFailure(MixlabError):
    pass


class KLViolation(MixlabError):
    pass


class CheegerViolation(MixlabError):
    pass


# zoo
class StateSpaceTooLarge(TooLarge):
    pass


class EmptyStateSpace(MixlabError):
    pass


class ModelSpecError(MixlabError):
    invariant = False


# coupling
class NoBuiltinCoupling(MixlabError):
    invariant = False


class NotFaithful(MixlabError):
    pass


class NoContraction(MixlabError):
    pass


class NoGeodesic(MixlabError):
    pass


class DistanceJumpViolation(MixlabError):
    pass


# knapsack_flow
class TooManyItems(TooLarge):
    pass


class NoBalancedPermutation(MixlabError):
    pass


class InfeasiblePath(MixlabError):
    pass


class DecodeMismatch(MixlabError):
    pass
