"""Eigendecomposition of the Gaussian matrix and everything derived from it.

``O A O^T = diag(lambda_1 >= ... >= lambda_n)`` with the eigenvectors as
the rows of ``O``; ``sqrt(A) = O^T sqrt(D) O``. The range of ``sqrt(A)``
is spanned by the first ``k`` rows of ``O``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapabilityError, ConvergenceError
from .triplet import MEMBERSHIP_TOL, ExponentOnly, LevyTriplet

SWEEP_LIMIT = 100
OFF_DIAG_RTOL = 1e-12
RANK_RTOL = 1e-10
SOLVE_TOL = 1e-9


def jacobi_eigh(A, sweep_limit: int = SWEEP_LIMIT, rtol: float = OFF_DIAG_RTOL):
    """Cyclic Jacobi rotations for a real symmetric matrix.

    Returns ``(eigenvalues, V, sweeps)`` with eigenvectors in the columns of
    ``V``, in the order the sweeps leave them.
    """
    a = np.array(A, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n == 1 or norm == 0.0:
        return np.diag(a).copy(), v, 0
    target = rtol * norm
    for sweep in range(1, sweep_limit + 1):
        off = _off_norm(a)
        if off <= target:
            return np.diag(a).copy(), v, sweep - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-300 * max(1.0, abs(diff)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = _off_norm(a)
    if off <= target:
        return np.diag(a).copy(), v, sweep_limit
    raise ConvergenceError(
        f"Jacobi sweeps did not converge after {sweep_limit} sweeps (off-diagonal norm {off:.3g})",
        iterations=sweep_limit,
    )


def _off_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _fix_sign(vec):
    big = np.flatnonzero(np.abs(vec) > 1e-8 * np.max(np.abs(vec)))
    return -vec if vec[big[0]] < 0 else vec


@dataclass(frozen=True, eq=False)
class SpectralData:
    O: np.ndarray
    D: np.ndarray
    k: int
    sqrtA: np.ndarray
    rank_tol: float
    sweeps: int = 0

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of ``range(sqrt(A))`` as rows (k x n)."""
        return self.O[: self.k]

    @property
    def null_basis(self) -> np.ndarray:
        return self.O[self.k:]

    @property
    def projector(self) -> np.ndarray:
        basis = self.range_basis
        return basis.T @ basis

    def range_distance(self, x) -> np.ndarray:
        """Euclidean distance of each row of ``x`` to ``range(sqrt(A))``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.linalg.norm(x @ self.null_basis.T, axis=1) if self.k < self.n else np.zeros(x.shape[0])

    def in_range(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.range_distance(x) <= tol * (1.0 + np.linalg.norm(x, axis=1))

    def off_range(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        return ~self.in_range(x, tol)


def decompose(A, rank_rtol: float = RANK_RTOL) -> SpectralData:
    """Spectral data of a symmetric PSD matrix.

    ``rank_rtol`` is relative to the largest eigenvalue; the absolute
    threshold is stored as ``rank_tol``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got shape {A.shape}")
    if np.any(np.abs(A - A.T) > 1e-12 * (1 + np.abs(A))):
        raise ValueError("A must be symmetric")
    lam, vecs, sweeps = jacobi_eigh(0.5 * (A + A.T))
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    O = np.array([_fix_sign(vecs[:, i]) for i in order])
    lam = np.where(lam < 0, 0.0, lam)
    rank_tol = rank_rtol * lam[0] if lam[0] > 0 else 0.0
    k = int(np.count_nonzero(lam > rank_tol))
    sqrtA = O.T @ (np.sqrt(lam)[:, None] * O)
    return SpectralData(O=O, D=lam, k=k, sqrtA=0.5 * (sqrtA + sqrtA.T), rank_tol=rank_tol, sweeps=sweeps)


def rotate_triplet(t: LevyTriplet, rot) -> LevyTriplet:
    """Triplet of ``R X`` for an orthogonal ``R``: ``(R a, R A R^T, mu R^-1)``."""
    if isinstance(t, ExponentOnly):
        raise CapabilityError("rotating a process needs its triplet; exponent-only input given")
    rot = np.asarray(rot, dtype=float)
    A = rot @ t.A @ rot.T
    return LevyTriplet(rot @ t.a, 0.5 * (A + A.T), t.mu.pushforward(rot), name=t.name)


def transform_triplet(t: LevyTriplet, s: SpectralData) -> LevyTriplet:
    """Triplet of ``Y = O X``, namely ``(O a, D, mu O^-1)``."""
    if isinstance(t, ExponentOnly):
        raise CapabilityError("transform_triplet needs the triplet; exponent-only input given")
    return LevyTriplet(s.O @ t.a, np.diag(s.D), t.mu.pushforward(s.O), name=t.name)


@dataclass(frozen=True)
class SolveResult:
    solvable: bool
    y: Optional[np.ndarray]
    residual: float
    distance: float


def solve_condition_S(s: SpectralData, bprime, solve_tol: float = SOLVE_TOL) -> SolveResult:
    """Decide whether ``sqrt(A) y = b'`` has a solution.

    Solvable iff the distance of ``b'`` to ``range(sqrt(A))`` is at most
    ``solve_tol * (1 + |b'|)``; the minimal-norm solution is returned then.
    """
    b = np.asarray(bprime, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("b' must be finite")
    basis = s.range_basis
    coeff = basis @ b
    dist = float(np.linalg.norm(b - basis.T @ coeff))
    solvable = dist <= solve_tol * (1.0 + float(np.linalg.norm(b)))
    if not solvable:
        return SolveResult(False, None, dist, dist)
    y = basis.T @ (coeff / np.sqrt(s.D[: s.k])) if s.k else np.zeros_like(b)
    residual = float(np.linalg.norm(s.sqrtA @ y - b))
    return SolveResult(True, y, residual, dist)
