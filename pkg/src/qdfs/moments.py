"""First-moment and covariance dynamics, plus dynamic DFS certification.

Propagation uses the exact matrix exponential (scaling-and-squaring) once
per call rather than explicit ODE stepping; systems here are tiny and
linear, so this removes step-size tuning entirely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import matrixkit as mk
from .analysis import DF_TOL, kalman_decompose
from .errors import DimensionMismatchError, NoDfsFoundError, NotPSDError
from .synthesis import ClosedLoop

__all__ = [
    "Trajectory",
    "evolve_mean",
    "evolve_covariance",
    "DynamicVerification",
    "dfs_dynamic_verify",
    "trajectory_csv",
]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled mean amplitudes, optionally with covariances."""

    times: np.ndarray
    states: np.ndarray
    covariances: tuple | None = None


def evolve_mean(a, x0, dt: float, steps: int) -> Trajectory:
    """Propagate ``x' = A x`` by repeated application of ``expm(A dt)``."""
    a = mk.as_cmatrix(a, "A")
    x = np.asarray(x0, dtype=complex).ravel()
    if x.size != a.shape[0]:
        raise DimensionMismatchError(f"x0 has size {x.size}, expected {a.shape[0]}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    step = sla.expm(a * dt)
    out = np.empty((steps + 1, x.size), dtype=complex)
    out[0] = x
    for k in range(steps):
        x = step @ x
        out[k + 1] = x
    times = dt * np.arange(steps + 1)
    return Trajectory(times, out)


def evolve_covariance(a, b, p0, dt: float, steps: int) -> Trajectory:
    """Propagate ``P' = A P + P A^H + B B^H`` by exact discretization.

    One augmented exponential yields both the state propagator ``F`` and
    the accumulated noise ``Q`` over a step, so ``P_{k+1} = F P_k F^H + Q``
    is exact for every step size.
    """
    a = mk.as_cmatrix(a, "A")
    b = mk.as_cmatrix(b, "B")
    p = mk.as_cmatrix(p0, "P0")
    n = a.shape[0]
    if b.shape[0] != n or p.shape != (n, n):
        raise DimensionMismatchError("B/P0 dimensions must match A")
    if dt <= 0:
        raise ValueError("dt must be positive")
    w = np.linalg.eigvalsh(mk.hermitian_part(p))
    if w.size and w.min() < -1e-9 * mk.norm_scale(p):
        raise NotPSDError(f"P0 eigenvalue {w.min():.3e} is negative")
    p = mk.hermitian_part(p)
    aug = np.zeros((2 * n, 2 * n), dtype=complex)
    aug[:n, :n] = a
    aug[:n, n:] = b @ b.conj().T
    aug[n:, n:] = -a.conj().T
    big = sla.expm(aug * dt)
    f = big[:n, :n]
    q = big[:n, n:] @ f.conj().T
    q = mk.hermitian_part(q)
    covs = [p.copy()]
    for _ in range(steps):
        p = mk.hermitian_part(f @ p @ f.conj().T + q)
        covs.append(p)
    times = dt * np.arange(steps + 1)
    states = np.zeros((steps + 1, n), dtype=complex)
    return Trajectory(times, states, tuple(covs))


@dataclass(frozen=True)
class DynamicVerification:
    decoupled: bool
    max_input_leak: float
    max_output_leak: float
    norm_drift: float
    df_dimension: int


def dfs_dynamic_verify(
    closed: ClosedLoop,
    tol: float = DF_TOL,
    horizon: float = 50.0,
) -> DynamicVerification:
    """Certify input/output decoupling of the decoherence-free block.

    In the Kalman basis the DF rows of ``B_cl`` must vanish (inputs never
    reach the block) and the DF columns of the output maps ``C A^k`` must
    vanish for ``k < 2n`` (the block never reaches an output; by
    Cayley-Hamilton that many powers suffice).  A mean trajectory started
    in the DF block is also propagated over ``horizon`` and its norm drift
    recorded.  Raises :class:`NoDfsFoundError` when the decoupled block is
    empty.
    """
    sys = closed.as_passive_system()
    kd = kalman_decompose(sys, tol)
    if kd.df_dimension == 0:
        raise NoDfsFoundError("system has no decoupled block at this tolerance")
    v_df = kd.df_basis
    b = closed.b_cl
    c = -b.conj().T
    n = closed.a_cl.shape[0]
    input_leak = float(np.max(np.linalg.norm(v_df.conj().T @ b, axis=1), initial=0.0))
    output_leak = 0.0
    mats = c.copy()
    for _ in range(2 * n):
        output_leak = max(output_leak, float(np.linalg.norm(mats @ v_df)))
        mats = mats @ closed.a_cl
    dt = min(0.01, horizon / 1000.0) if horizon > 0 else 0.01
    steps = max(1, int(round(horizon / dt)))
    x0 = v_df[:, 0]
    traj = evolve_mean(closed.a_cl, x0, dt, steps)
    norms = np.linalg.norm(traj.states, axis=1)
    drift = float(np.max(np.abs(norms - np.linalg.norm(x0))))
    decoupled = input_leak <= tol and output_leak <= tol
    return DynamicVerification(decoupled, input_leak, output_leak, drift, kd.df_dimension)


def trajectory_csv(traj: Trajectory) -> str:
    """Render a mean trajectory as CSV with fixed 17-significant-digit floats."""
    n = traj.states.shape[1]
    header = "t, " + ", ".join(f"re(x_{k+1}), im(x_{k+1})" for k in range(n))
    lines = [header]
    for t, row in zip(traj.times, traj.states):
        cells = [f"{t:.16e}"]
        for z in row:
            cells.append(f"{z.real:.16e}")
            cells.append(f"{z.imag:.16e}")
        lines.append(", ".join(cells))
    return "\n".join(lines) + "\n"
