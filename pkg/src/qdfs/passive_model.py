"""Annihilation-only passive systems and their realizability identities.

A system described by a Hermitian frequency matrix ``M`` and coupling
matrices ``alpha_i`` has state-space form

    A = -i M - (1/2) sum_i alpha_i^H alpha_i,   B_i = -alpha_i^H,   C_i = alpha_i,

and satisfies the realizability identity ``A + A^H + sum_i B_i B_i^H = 0``
together with ``C_i = -B_i^H``.  These identities are what make a complex
linear model a genuine open harmonic oscillator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matrixkit as mk
from .errors import DimensionMismatchError, NotHermitianError, NotRealizableError

__all__ = [
    "DEFAULT_TOL",
    "PLANT_CHANNELS",
    "CONTROLLER_CHANNELS",
    "HamiltonianCoupling",
    "PassiveSystem",
    "RealizabilityReport",
    "PassivityCertificate",
    "realize",
    "check_realizability",
    "recover_hamiltonian",
    "check_passivity",
]

DEFAULT_TOL = 1e-9

PLANT_CHANNELS = ("w", "u", "f")
CONTROLLER_CHANNELS = ("y'", "z'", "v")
_KNOWN_CHANNELS = PLANT_CHANNELS + CONTROLLER_CHANNELS


@dataclass(frozen=True)
class HamiltonianCoupling:
    """Hermitian frequency matrix plus named coupling blocks.

    ``couplings`` is an ordered tuple of ``(label, alpha)`` pairs; each
    ``alpha`` is an ``m_i x n`` matrix in root-rate units.
    """

    m_matrix: np.ndarray
    couplings: tuple = ()
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        m = mk.as_cmatrix(self.m_matrix, "M")
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"M must be square, got {m.shape}")
        dev = np.linalg.norm(m - m.conj().T)
        if dev > self.tol * mk.norm_scale(m):
            raise NotHermitianError(f"M deviates from Hermitian by {dev:.3e}")
        object.__setattr__(self, "m_matrix", mk.hermitian_part(m))
        seen = set()
        normed = []
        for label, alpha in self.couplings:
            if label in seen:
                raise DimensionMismatchError(f"duplicate channel label {label!r}")
            if label not in _KNOWN_CHANNELS:
                raise DimensionMismatchError(
                    f"unknown channel label {label!r}; expected one of {_KNOWN_CHANNELS}"
                )
            seen.add(label)
            a = mk.as_cmatrix(alpha, f"alpha[{label}]")
            if a.shape[1] != m.shape[0]:
                raise DimensionMismatchError(
                    f"alpha[{label}] has {a.shape[1]} columns, expected {m.shape[0]}"
                )
            normed.append((label, a))
        object.__setattr__(self, "couplings", tuple(normed))

    @property
    def n(self) -> int:
        return self.m_matrix.shape[0]

    def alpha(self, label: str) -> np.ndarray:
        for lab, a in self.couplings:
            if lab == label:
                return a
        raise KeyError(label)


@dataclass(frozen=True)
class PassiveSystem:
    """State-space triple with named input/output channel blocks."""

    a_matrix: np.ndarray
    b_blocks: tuple = ()
    c_blocks: tuple = ()
    provenance: HamiltonianCoupling | None = None

    def __post_init__(self):
        a = mk.as_cmatrix(self.a_matrix, "A")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"A must be square, got {a.shape}")
        object.__setattr__(self, "a_matrix", a)
        bs = []
        for label, b in self.b_blocks:
            b = mk.as_cmatrix(b, f"B[{label}]")
            if b.shape[0] != a.shape[0]:
                raise DimensionMismatchError(
                    f"B[{label}] has {b.shape[0]} rows, expected {a.shape[0]}"
                )
            bs.append((label, b))
        object.__setattr__(self, "b_blocks", tuple(bs))
        cs = []
        for label, c in self.c_blocks:
            c = mk.as_cmatrix(c, f"C[{label}]")
            if c.shape[1] != a.shape[0]:
                raise DimensionMismatchError(
                    f"C[{label}] has {c.shape[1]} columns, expected {a.shape[0]}"
                )
            cs.append((label, c))
        object.__setattr__(self, "c_blocks", tuple(cs))

    @property
    def n(self) -> int:
        return self.a_matrix.shape[0]

    def b(self, label: str) -> np.ndarray:
        for lab, b in self.b_blocks:
            if lab == label:
                return b
        raise KeyError(label)

    def c(self, label: str) -> np.ndarray:
        for lab, c in self.c_blocks:
            if lab == label:
                return c
        raise KeyError(label)

    def b_aggregate(self) -> np.ndarray:
        """All input blocks side by side, in declaration order."""
        if not self.b_blocks:
            return np.zeros((self.n, 0), dtype=complex)
        return np.hstack([b for _, b in self.b_blocks])

    def c_aggregate(self) -> np.ndarray:
        """All output blocks stacked, in declaration order."""
        if not self.c_blocks:
            return np.zeros((0, self.n), dtype=complex)
        return np.vstack([c for _, c in self.c_blocks])


@dataclass(frozen=True)
class RealizabilityReport:
    residual: float
    c_residual: float
    ok: bool


@dataclass(frozen=True)
class PassivityCertificate:
    """Outcome of the positive-realness block test."""

    p_matrix: np.ndarray
    c0: np.ndarray
    d0: np.ndarray
    verdict: bool
    witness_eigenvalue: float
    block: np.ndarray = field(repr=False, default=None)


def realize(hc: HamiltonianCoupling) -> PassiveSystem:
    """Build the state-space form of a Hamiltonian/coupling description.

    The output satisfies the realizability identity by construction; every
    coupled channel gets both an input block ``B_i = -alpha_i^H`` and an
    output block ``C_i = alpha_i``.
    """
    a = -1j * hc.m_matrix
    for _, alpha in hc.couplings:
        a = a - 0.5 * (alpha.conj().T @ alpha)
    b_blocks = tuple((lab, -alpha.conj().T) for lab, alpha in hc.couplings)
    c_blocks = tuple((lab, alpha.copy()) for lab, alpha in hc.couplings)
    return PassiveSystem(a, b_blocks, c_blocks, provenance=hc)


def check_realizability(sys: PassiveSystem, tol: float = DEFAULT_TOL) -> RealizabilityReport:
    """Measure how far a system is from the realizability identities.

    ``residual`` is ``||A + A^H + sum B_i B_i^H||_F / max(1, ||A||_F)``;
    ``c_residual`` covers the blockwise ``C_i = -B_i^H`` requirement for
    channels that declare outputs.
    """
    a = sys.a_matrix
    acc = a + a.conj().T
    for _, b in sys.b_blocks:
        acc = acc + b @ b.conj().T
    scale = mk.norm_scale(a)
    residual = float(np.linalg.norm(acc)) / scale
    c_res = 0.0
    for lab, c in sys.c_blocks:
        try:
            b = sys.b(lab)
        except KeyError:
            continue
        if c.shape[0] != b.shape[1]:
            raise DimensionMismatchError(
                f"channel {lab!r}: C has {c.shape[0]} rows but B has {b.shape[1]} columns"
            )
        c_res = max(c_res, float(np.linalg.norm(c + b.conj().T)) / scale)
    return RealizabilityReport(residual, c_res, residual <= tol and c_res <= tol)


def recover_hamiltonian(sys: PassiveSystem, tol: float = DEFAULT_TOL) -> HamiltonianCoupling:
    """Invert :func:`realize`: extract ``M = i(A + (1/2) sum B_i B_i^H)``.

    Rejects systems whose realizability residual exceeds ``tol`` rather
    than silently projecting, so modeling errors surface here.
    """
    report = check_realizability(sys, tol)
    if not report.ok:
        raise NotRealizableError(
            f"realizability residual {max(report.residual, report.c_residual):.3e} "
            f"exceeds tolerance {tol:.1e}"
        )
    acc = sys.a_matrix.copy()
    for _, b in sys.b_blocks:
        acc = acc + 0.5 * (b @ b.conj().T)
    m = 1j * acc
    dev = np.linalg.norm(m - m.conj().T)
    if dev > tol * mk.norm_scale(m):
        raise NotRealizableError(f"recovered M deviates from Hermitian by {dev:.3e}")
    couplings = tuple((lab, -b.conj().T) for lab, b in sys.b_blocks)
    return HamiltonianCoupling(mk.hermitian_part(m), couplings, tol=max(tol, DEFAULT_TOL))


def check_passivity(
    sys: PassiveSystem,
    p_matrix,
    c0,
    d0,
    tol: float = DEFAULT_TOL,
) -> PassivityCertificate:
    """Positive-realness test for a candidate storage matrix ``P``.

    Assembles ``[[P A + A^H P, P B - C0^H], [B^H P - C0, -(D0 + D0^H)]]``
    with ``B`` the aggregated input matrix and certifies passivity when the
    block is negative semidefinite.
    """
    a = sys.a_matrix
    b = sys.b_aggregate()
    p = mk.as_cmatrix(p_matrix, "P")
    c0 = mk.as_cmatrix(c0, "C0")
    d0 = mk.as_cmatrix(d0, "D0")
    n = sys.n
    m = b.shape[1]
    if p.shape != (n, n):
        raise DimensionMismatchError(f"P must be {n}x{n}, got {p.shape}")
    dev = np.linalg.norm(p - p.conj().T)
    if dev > tol * mk.norm_scale(p):
        raise NotHermitianError(f"P deviates from Hermitian by {dev:.3e}")
    if c0.shape[1] != n:
        raise DimensionMismatchError(f"C0 must have {n} columns, got {c0.shape}")
    if d0.shape != (c0.shape[0], m):
        raise DimensionMismatchError(
            f"D0 must be {c0.shape[0]}x{m}, got {d0.shape}"
        )
    p = mk.hermitian_part(p)
    top = np.hstack([p @ a + a.conj().T @ p, p @ b - c0.conj().T])
    bot = np.hstack([b.conj().T @ p - c0, -(d0 + d0.conj().T)])
    block = np.vstack([top, bot])
    witness = mk.max_hermitian_eigenvalue(block, tol)
    verdict = witness <= tol * mk.norm_scale(block)
    return PassivityCertificate(p, c0, d0, verdict, witness, block)
