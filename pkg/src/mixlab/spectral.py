"""Spectra of reversible chains and the bounds they imply on mixing time."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain, check_reversibility
from .errors import ConstantVector, DegenerateSpectrum, TooLarge

JACOBI_TOL = 1e-12
MAX_STATES = 5000


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple  # descending
    gap: float
    lambda_max: float

    @property
    def lambda1(self) -> float:
        return self.eigenvalues[1] if len(self.eigenvalues) > 1 else 0.0

    @property
    def smallest(self) -> float:
        return self.eigenvalues[-1]

    @classmethod
    def from_values(cls, values) -> "Spectrum":
        ev = tuple(sorted((float(v) for v in values), reverse=True))
        lam1 = ev[1] if len(ev) > 1 else 0.0
        lmax = max(lam1, abs(ev[-1])) if len(ev) > 1 else 0.0
        return cls(eigenvalues=ev, gap=1.0 - lam1, lambda_max=lmax)


def _round_robin(n: int) -> list[list[tuple[int, int]]]:
    """Pairings for one cyclic sweep: n-1 rounds of disjoint index pairs."""
    m = n + (n % 2)
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for k in range(m // 2):
            p, q = idx[k], idx[m - 1 - k]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def jacobi_eigh(A: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100, vectors: bool = False):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, grouped into rounds of
    disjoint pairs whose rotations commute and are applied together.
    Stops when the off-diagonal Frobenius norm falls below ``tol``.
    Returns eigenvalues (unsorted diagonal) and, if asked, the rotation
    matrix whose columns are the eigenvectors.
    """
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    V = np.eye(n) if vectors else None
    if n < 2:
        return np.diag(A).copy(), V
    schedule = [
        (np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in _round_robin(n) if r
    ]
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float((A[offdiag] ** 2).sum()))
        if off < tol:
            break
        for P, Q in schedule:
            apq = A[P, Q]
            app = A[P, P]
            aqq = A[Q, Q]
            c = np.ones_like(apq)
            s = np.zeros_like(apq)
            live = np.abs(apq) > 1e-300
            if not live.any():
                continue
            theta = (aqq[live] - app[live]) / (2.0 * apq[live])
            # tan of the rotation angle; 1/(2 theta) once theta^2 would overflow
            big = np.abs(theta) > 1e150
            tb = np.where(big, 1.0, theta)
            t = np.sign(tb) / (np.abs(tb) + np.sqrt(tb * tb + 1.0))
            t[big] = 0.5 / theta[big]
            t[theta == 0] = 1.0
            c[live] = 1.0 / np.sqrt(t * t + 1.0)
            s[live] = t * c[live]
            colP = A[:, P].copy()
            colQ = A[:, Q].copy()
            A[:, P] = colP * c - colQ * s
            A[:, Q] = colP * s + colQ * c
            rowP = A[P, :].copy()
            rowQ = A[Q, :].copy()
            A[P, :] = c[:, None] * rowP - s[:, None] * rowQ
            A[Q, :] = s[:, None] * rowP + c[:, None] * rowQ
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            if V is not None:
                vP = V[:, P].copy()
                vQ = V[:, Q].copy()
                V[:, P] = vP * c - vQ * s
                V[:, Q] = vP * s + vQ * c
    return np.diag(A).copy(), V


def symmetrized_kernel(chain: Chain) -> np.ndarray:
    """S = D^{1/2} P D^{-1/2} with D = diag(pi), on the closed class."""
    ch = chain.restricted()
    r = np.sqrt(ch.pi_float)
    S = r[:, None] * ch.dense / r[None, :]
    return 0.5 * (S + S.T)


def eigen_spectrum(chain: Chain, method: str = "auto", max_states: int = MAX_STATES) -> Spectrum:
    """All eigenvalues of a reversible chain (restricted to its closed class).

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to 600
    states, LAPACK beyond).
    """
    ch = chain.restricted()
    if ch.n_states > max_states:
        raise TooLarge(f"{ch.n_states} states exceed the eigen-analysis cap {max_states}", n=ch.n_states)
    check_reversibility(ch)
    S = symmetrized_kernel(ch)
    if method == "auto":
        method = "jacobi" if ch.n_states <= 600 else "lapack"
    if method == "jacobi":
        values, _ = jacobi_eigh(S)
    elif method == "lapack":
        values = np.linalg.eigvalsh(S)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Spectrum.from_values(values)


def second_eigenvector(chain: Chain) -> tuple[float, np.ndarray]:
    """(lambda_1, psi) with psi the right eigenvector of P for lambda_1."""
    ch = chain.restricted()
    check_reversibility(ch)
    values, V = jacobi_eigh(symmetrized_kernel(ch), vectors=True)
    order = np.argsort(-values)
    u = V[:, order[1]]
    return float(values[order[1]]), u / np.sqrt(ch.pi_float)


def gap_mixing_bounds(spectrum: Spectrum, pi_x, eps) -> tuple[float, float]:
    """Spectral sandwich for tau_x(eps): returns (upper, lower).

    upper = (ln 1/pi(x) + ln 1/eps) / (1 - lambda_max)
    lower = lambda_max / (2 (1 - lambda_max)) * ln 1/(2 eps)   (a bound on max_x tau_x)
    """
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    lmax = spectrum.lambda_max
    if lmax >= 1 - 1e-12:
        raise DegenerateSpectrum(f"lambda_max = {lmax} leaves no gap", lambda_max=lmax)
    gap = 1.0 - lmax
    upper = (math.log(1 / float(pi_x)) + math.log(1 / float(eps))) / gap
    lower = 0.5 * lmax / gap * math.log(1 / (2 * float(eps)))
    return upper, lower


def variational_quotient(chain: Chain, psi) -> float:
    """Dirichlet form over variance: sum (psi_x-psi_y)^2 Q(x,y) / sum (psi_x-psi_y)^2 pi_x pi_y."""
    ch = chain.restricted()
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (chain.n_states,) and psi.shape != (ch.n_states,):
        raise ValueError("psi has the wrong length")
    if psi.shape[0] != ch.n_states:
        psi = psi[list(chain.support)]
    pi = ch.pi_float
    Q = pi[:, None] * ch.dense
    diff2 = (psi[:, None] - psi[None, :]) ** 2
    num = float((diff2 * Q).sum())
    den = float((diff2 * np.outer(pi, pi)).sum())
    scale = float((psi * psi).max()) if psi.size else 0.0
    if den <= 1e-28 * max(scale, 1e-300):
        raise ConstantVector("psi is constant on the support; the quotient is undefined")
    return num / den


def rayleigh_quotient(chain: Chain, x) -> float:
    """<x, xP> / <x, x> in L^2(1/pi); ``x`` is a row vector (signed measure)."""
    ch = chain.restricted()
    x = np.asarray(x, dtype=float)
    w = 1.0 / ch.pi_float
    xP = x @ ch.dense
    return float((x * xP * w).sum() / (x * x * w).sum())


def project_out_stationary(chain: Chain, x) -> np.ndarray:
    """Component of ``x`` orthogonal to pi in L^2(1/pi), i.e. with coordinates summing to zero."""
    ch = chain.restricted()
    x = np.asarray(x, dtype=float)
    return x - x.sum() * ch.pi_float


def spectrum_csv(spectrum: Spectrum) -> str:
    out = io.StringIO()
    out.write("index,eigenvalue\n")
    for i, v in enumerate(spectrum.eigenvalues):
        out.write(f"{i},{v:.15g}\n")
    out.write(f"gap,{spectrum.gap:.15g}\n")
    out.write(f"lambda_max,{spectrum.lambda_max:.15g}\n")
    return out.getvalue()


