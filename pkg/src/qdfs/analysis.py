"""Controllability/observability tests, Kalman decomposition, DFS detection.

For passive systems, controllability from the noise inputs, observability
from the output fields, and Hurwitz stability are equivalent, so a mode is
decoherence-free exactly when the dynamics matrix ``A`` carries a pole on
the imaginary axis (all remaining poles strictly in the left half-plane).
The geometric counterpart is the uncontrollable block of the Kalman
decomposition; this module computes both and cross-checks them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixkit as mk
from .errors import (
    DimensionMismatchError,
    InconsistentError,
    NotHermitianError,
    ToleranceAmbiguousError,
)
from .passive_model import PassiveSystem

__all__ = [
    "DF_TOL",
    "controllable_subspace",
    "controllable",
    "observable",
    "KalmanDecomposition",
    "kalman_decompose",
    "DfsReport",
    "dfs_report",
    "OpenLoopVerdict",
    "open_loop_no_go",
    "dfs_monotonicity_check",
]

DF_TOL = 1e-8


def _orth_columns(m: np.ndarray, thr: float, ambiguity_band: float = 10.0):
    """Orthonormal basis of the column space at absolute threshold ``thr``.

    Raises :class:`ToleranceAmbiguousError` when a singular value falls
    within a factor ``ambiguity_band`` of the threshold, since rank is then
    not well separated.
    """
    if m.size == 0:
        return m.reshape(m.shape[0], 0)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size:
        near = (s > thr / ambiguity_band) & (s < thr * ambiguity_band)
        if np.any(near):
            raise ToleranceAmbiguousError(
                f"singular value {s[near][0]:.3e} within a factor "
                f"{ambiguity_band} of rank threshold {thr:.3e}"
            )
    keep = int(np.sum(s > thr))
    return u[:, :keep]


def controllable_subspace(a, b, tol: float = DF_TOL) -> np.ndarray:
    """Orthonormal basis of the smallest A-invariant subspace containing im B.

    Uses repeated orthogonalized Krylov expansion (numerically stabler than
    forming the raw controllability matrix).  ``A`` and ``B`` are normalized
    first so the rank threshold is an absolute ``tol``.
    """
    a = mk.as_cmatrix(a, "A")
    b = mk.as_cmatrix(b, "B")
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"A must be square, got {a.shape}")
    if b.shape[0] != n:
        raise DimensionMismatchError(f"B has {b.shape[0]} rows, expected {n}")
    if b.shape[1] == 0 or not np.linalg.norm(b):
        return np.zeros((n, 0), dtype=complex)
    an = a / mk.norm_scale(a)
    v = _orth_columns(b / np.linalg.norm(b), tol)
    for _ in range(n):
        if v.shape[1] >= n:
            break
        w = an @ v
        w = w - v @ (v.conj().T @ w)
        w = _orth_columns(w, tol)
        if w.shape[1] == 0:
            break
        v = np.hstack([v, w])
        # fight rounding drift in long expansions
        v, _ = np.linalg.qr(v)
    return v


def controllable(a, b, tol: float = DF_TOL) -> bool:
    """True iff the Krylov span of (A, B) fills the whole state space."""
    a = mk.as_cmatrix(a, "A")
    return controllable_subspace(a, b, tol).shape[1] == a.shape[0]


def observable(a, c, tol: float = DF_TOL) -> bool:
    """Dual test: observability of (A, C) is controllability of (A^H, C^H)."""
    a = mk.as_cmatrix(a, "A")
    c = mk.as_cmatrix(c, "C")
    if c.shape[1] != a.shape[0]:
        raise DimensionMismatchError(f"C has {c.shape[1]} columns, expected {a.shape[0]}")
    return controllable(a.conj().T, c.conj().T, tol)


@dataclass(frozen=True)
class KalmanDecomposition:
    """Unitary basis change exposing the driven and decoupled blocks.

    Columns of ``t_matrix`` list an orthonormal basis of the controllable
    subspace first, then its complement; in that basis the transformed
    system is block upper-triangular with the decoupled block last.
    """

    t_matrix: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    b1_block: np.ndarray
    c1_block: np.ndarray
    df_dimension: int
    lower_left_residual: float
    b_df_residual: float
    c_df_residual: float
    a22_max_real: float

    @property
    def df_basis(self) -> np.ndarray:
        nc = self.a11.shape[0]
        return self.t_matrix[:, nc:]


def kalman_decompose(sys: PassiveSystem, tol: float = DF_TOL) -> KalmanDecomposition:
    """Split a system into its noise-driven and decoupled parts.

    The decoupled dimension is ``n`` minus the dimension of the Krylov span
    of all input blocks.  Residual fields record how well the transformed
    system honors the block-triangular structure; for realizable systems
    they sit at rounding level, and the decoupled block ``A22`` has purely
    imaginary spectrum.
    """
    a = sys.a_matrix
    b = sys.b_aggregate()
    c = sys.c_aggregate()
    n = sys.n
    vc = controllable_subspace(a, b, tol)
    nc = vc.shape[1]
    if nc == 0:
        t = np.eye(n, dtype=complex)
    elif nc == n:
        t = vc
    else:
        # complete to a full unitary basis via the projector complement
        proj = np.eye(n, dtype=complex) - vc @ vc.conj().T
        u, s, _ = np.linalg.svd(proj)
        t = np.hstack([vc, u[:, : n - nc]])
    at = t.conj().T @ a @ t
    bt = t.conj().T @ b
    ct = c @ t
    a11 = at[:nc, :nc]
    a12 = at[:nc, nc:]
    a21 = at[nc:, :nc]
    a22 = at[nc:, nc:]
    scale = mk.norm_scale(a)
    a22_max_real = float(np.max(np.linalg.eigvals(a22).real)) if a22.size else 0.0
    return KalmanDecomposition(
        t_matrix=t,
        a11=a11,
        a12=a12,
        a22=a22,
        b1_block=bt[:nc, :],
        c1_block=ct[:, :nc],
        df_dimension=n - nc,
        lower_left_residual=float(np.linalg.norm(a21)) / scale,
        b_df_residual=float(np.linalg.norm(bt[nc:, :])) / max(1.0, float(np.linalg.norm(b))),
        c_df_residual=float(np.linalg.norm(ct[:, nc:])) / max(1.0, float(np.linalg.norm(c))),
        a22_max_real=a22_max_real,
    )


@dataclass(frozen=True)
class DfsReport:
    """Decoherence-free mode count with spectral and geometric evidence.

    ``df_dimension`` counts the imaginary-axis poles (the spectral
    criterion); ``subspace_dimension`` is the decoupled-block size from the
    Kalman decomposition.  The two agree on realizable systems; when they
    disagree, ``consistency`` is False and both counts are reported.
    """

    df_dimension: int
    subspace_dimension: int
    df_eigenvalues: np.ndarray
    stable_eigenvalues: np.ndarray
    basis: np.ndarray
    consistency: bool
    tol_used: float


def dfs_report(sys: PassiveSystem, tol: float = DF_TOL, strict: bool = False) -> DfsReport:
    """Classify the spectrum of ``A`` and cross-check against the geometry.

    Eigenvalues with ``|Re| <= tol * max(1, ||A||_F)`` count as
    decoherence-free; the rest must have negative real part (a positive
    real part means the model is not passive and is rejected).  With
    ``strict=True`` a spectral/geometric disagreement raises
    :class:`InconsistentError` instead of being flagged.
    """
    a = sys.a_matrix
    scale = mk.norm_scale(a)
    spec = mk.eigenvalues(a)
    band = tol * scale
    re = spec.values.real
    if np.any(re > band):
        raise ValueError(
            f"eigenvalue with real part {re.max():.3e} > {band:.3e}: system is not passive"
        )
    on_axis = np.abs(re) <= band
    kd = kalman_decompose(sys, tol)
    spectral = int(np.sum(on_axis))
    consistency = spectral == kd.df_dimension
    if strict and not consistency:
        raise InconsistentError(spectral, kd.df_dimension)
    return DfsReport(
        df_dimension=spectral,
        subspace_dimension=kd.df_dimension,
        df_eigenvalues=spec.values[on_axis],
        stable_eigenvalues=spec.values[~on_axis],
        basis=kd.df_basis,
        consistency=consistency,
        tol_used=tol,
    )


@dataclass(frozen=True)
class OpenLoopVerdict:
    """Outcome of the static (no-feedback) DFS impossibility test."""

    controllable_check: bool
    hurwitz: bool
    dfs_possible: bool
    undetermined: bool
    max_real_part: float


def open_loop_no_go(m_matrix, b1, b3, tol: float = DF_TOL) -> OpenLoopVerdict:
    """Static coupling cannot create decoherence-free modes.

    When ``(-iM, B1)`` is controllable, ``A_p = -iM - (1/2)(B1 B1^H + B3 B3^H)``
    is Hurwitz for every engineered coupling ``B3``, so no DFS can appear.
    When the pair is uncontrollable the test is silent and the verdict is
    reported as undetermined.
    """
    m = mk.as_cmatrix(m_matrix, "M")
    dev = np.linalg.norm(m - m.conj().T)
    if dev > tol * mk.norm_scale(m):
        raise NotHermitianError(f"M deviates from Hermitian by {dev:.3e}")
    m = mk.hermitian_part(m)
    b1 = mk.as_cmatrix(b1, "B1")
    b3 = mk.as_cmatrix(b3, "B3")
    n = m.shape[0]
    if b1.shape[0] != n or b3.shape[0] != n:
        raise DimensionMismatchError("B1/B3 row count must match M")
    ap = -1j * m - 0.5 * (b1 @ b1.conj().T + b3 @ b3.conj().T)
    max_re = float(np.max(np.linalg.eigvals(ap).real))
    ctrl = controllable(-1j * m, b1, tol)
    if ctrl:
        return OpenLoopVerdict(True, max_re < 0.0, dfs_possible=False, undetermined=False,
                               max_real_part=max_re)
    return OpenLoopVerdict(False, max_re < 0.0, dfs_possible=True, undetermined=True,
                           max_real_part=max_re)


def _uncontrollable_dim(a, b, tol: float) -> int:
    return a.shape[0] - controllable_subspace(a, b, tol).shape[1]


def dfs_monotonicity_check(m_matrix, b1, b3, tol: float = DF_TOL) -> bool:
    """Adding engineered static couplings can only shrink the DFS.

    Compares the decoupled dimension of ``(A_p, [B1 B3])`` against each
    single-input version; the joint kernel of the two controllability maps
    is contained in both, so the joint dimension is never larger.
    """
    m = mk.as_cmatrix(m_matrix, "M")
    dev = np.linalg.norm(m - m.conj().T)
    if dev > tol * mk.norm_scale(m):
        raise NotHermitianError(f"M deviates from Hermitian by {dev:.3e}")
    b1 = mk.as_cmatrix(b1, "B1")
    b3 = mk.as_cmatrix(b3, "B3")
    ap = -1j * mk.hermitian_part(m) - 0.5 * (b1 @ b1.conj().T + b3 @ b3.conj().T)
    joint = _uncontrollable_dim(ap, np.hstack([b1, b3]), tol)
    only_w = _uncontrollable_dim(ap, b1, tol)
    only_f = _uncontrollable_dim(ap, b3, tol)
    return joint <= min(only_w, only_f)
