"""Dense complex linear-algebra kernel.

All routines operate on 2-D complex ``numpy`` arrays and use tolerances
relative to ``max(1, ||A||_F)`` so that checks stay meaningful across
coupling strengths spanning several orders of magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceFailure,
    NonSquareError,
    NotHermitianError,
    NotPSDError,
    SingularSylvesterError,
)

__all__ = [
    "Spectrum",
    "as_cmatrix",
    "norm_scale",
    "hermitian_part",
    "eigenvalues",
    "is_negative_semidefinite",
    "max_hermitian_eigenvalue",
    "solve_lyapunov",
    "rank",
    "psd_sqrt",
    "spectra_match",
]


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce input to a 2-D complex128 array with finite entries."""
    m = np.atleast_2d(np.asarray(a, dtype=complex))
    if m.ndim != 2:
        raise NonSquareError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m.real)) or m.size and not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def norm_scale(a: np.ndarray) -> float:
    """Unit-free scale ``max(1, ||A||_F)`` used by all relative tolerances."""
    if a.size == 0:
        return 1.0
    return max(1.0, float(np.linalg.norm(a)))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue multiset with per-eigenvalue backward-error bounds."""

    values: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def eigenvalues(a, tol: float = 1e-10) -> Spectrum:
    """Eigenvalues of a square complex matrix.

    Uses Hessenberg reduction followed by shifted-QR iteration (LAPACK
    ``zgeev``).  Each eigenpair residual ``||A v - lambda v||`` must stay
    below ``tol * n * ||A||``; larger residuals signal an ill-conditioned
    input and raise :class:`ConvergenceFailure`.
    """
    a = as_cmatrix(a, "A")
    n, m = a.shape
    if n != m:
        raise NonSquareError(f"eigenvalues needs a square matrix, got {a.shape}")
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex), np.zeros(0))
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:  # iteration cap inside LAPACK
        raise ConvergenceFailure(str(exc)) from exc
    scale = max(1.0, float(np.linalg.norm(a)))
    res = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    res = res / np.maximum(np.linalg.norm(vecs, axis=0), np.finfo(float).tiny)
    if np.any(res > tol * n * scale):
        raise ConvergenceFailure(
            f"eigenpair residual {res.max():.3e} exceeds {tol * n * scale:.3e}"
        )
    return Spectrum(vals, res / scale)


def _require_hermitian(h: np.ndarray, tol: float, name: str) -> np.ndarray:
    dev = np.linalg.norm(h - h.conj().T)
    if dev > tol * norm_scale(h):
        raise NotHermitianError(
            f"{name} deviates from Hermitian by {dev:.3e} (tol {tol * norm_scale(h):.3e})"
        )
    return hermitian_part(h)


def max_hermitian_eigenvalue(h, tol: float = 1e-9) -> float:
    """Largest eigenvalue of the Hermitian part, after a Hermiticity check."""
    h = as_cmatrix(h, "H")
    if h.shape[0] != h.shape[1]:
        raise NonSquareError(f"need a square matrix, got {h.shape}")
    if h.size == 0:
        return 0.0
    hs = _require_hermitian(h, tol, "H")
    return float(np.linalg.eigvalsh(hs).max())


def is_negative_semidefinite(h, tol: float = 1e-9) -> bool:
    """True iff the symmetrized matrix has max eigenvalue <= tol * max(1, ||H||)."""
    h = as_cmatrix(h, "H")
    if h.size == 0:
        return True
    return max_hermitian_eigenvalue(h, tol) <= tol * norm_scale(h)


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``A X + X A^H + Q = 0`` for Hermitian ``Q``.

    Requires the spectra of ``A`` and ``-A^H`` to be disjoint; vanishing
    eigenvalue sums raise :class:`SingularSylvesterError`.
    """
    a = as_cmatrix(a, "A")
    q = as_cmatrix(q, "Q")
    if a.shape[0] != a.shape[1]:
        raise NonSquareError(f"A must be square, got {a.shape}")
    if q.shape != a.shape:
        raise NonSquareError(f"Q must match A, got {q.shape} vs {a.shape}")
    ev = np.linalg.eigvals(a)
    sums = ev[:, None] + ev.conj()[None, :]
    scale = norm_scale(a)
    if np.min(np.abs(sums)) <= 1e-12 * scale:
        raise SingularSylvesterError(
            f"eigenvalue sum {np.min(np.abs(sums)):.3e} vanishes within tolerance"
        )
    try:
        x = sla.solve_sylvester(a, a.conj().T, -q)
    except np.linalg.LinAlgError as exc:
        raise SingularSylvesterError(str(exc)) from exc
    if np.linalg.norm(q - q.conj().T) <= 1e-9 * norm_scale(q):
        x = hermitian_part(x)
    res = np.linalg.norm(a @ x + x @ a.conj().T + q)
    bound = 1e-9 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(q))
    if res > max(bound, 1e-12):
        raise SingularSylvesterError(
            f"Lyapunov residual {res:.3e} exceeds bound {bound:.3e}"
        )
    return x


def rank(a, tol: float = 1e-9) -> int:
    """Number of singular values above ``tol * sigma_max``."""
    a = as_cmatrix(a, "A")
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def psd_sqrt(n, tol: float = 1e-9) -> np.ndarray:
    """Hermitian PSD principal square root ``G`` with ``G G^H = N``.

    Eigenvalues in ``[-tol * max(1, ||N||), 0)`` are clamped to zero; more
    negative ones raise :class:`NotPSDError`.
    """
    n = as_cmatrix(n, "N")
    if n.shape[0] != n.shape[1]:
        raise NonSquareError(f"N must be square, got {n.shape}")
    if n.size == 0:
        return n.copy()
    ns = _require_hermitian(n, tol, "N")
    w, u = np.linalg.eigh(ns)
    clamp = tol * norm_scale(ns)
    if w.min() < -clamp:
        raise NotPSDError(f"eigenvalue {w.min():.3e} below clamp band {-clamp:.3e}")
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.conj().T


def spectra_match(a, b, tol: float) -> tuple[bool, float]:
    """Greedy minimal-distance multiset comparison of two eigenvalue lists.

    Pairs values by ascending distance; returns (all pairs within ``tol``,
    largest matched distance).  Eigenvalue ordering from a solver is not
    canonical, so a direct elementwise comparison would be meaningless.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return False, float("inf")
    if a.size == 0:
        return True, 0.0
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_a = np.zeros(a.size, dtype=bool)
    used_b = np.zeros(b.size, dtype=bool)
    worst = 0.0
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), b.size)
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        worst = max(worst, float(dist[i, j]))
        matched += 1
        if matched == a.size:
            break
    return worst <= tol, worst
