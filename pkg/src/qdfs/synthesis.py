"""Closed-loop assembly and feedback-gain synthesis for DFS creation.

The plant (static channels merged into ``B1``, feedback channel ``B2``) is
interconnected with a same-size passive controller through two unitary
scattering matrices: ``S`` routes plant output and controller environment
into the controller inputs, ``W`` routes controller outputs back.  With the
controller drift fixed by the interconnection, the closed-loop spectrum
splits into the spectra of two matrices ``a_hat`` and ``a_check``; gains
``G1, G2`` place eigenvalues of one factor on the imaginary axis while a
matrix inequality guarantees a completion ``G3`` making the controller a
genuine open oscillator.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt

from . import matrixkit as mk
from .analysis import DF_TOL, DfsReport, controllable, dfs_report
from .errors import (
    ConvergenceFailure,
    DimensionMismatchError,
    NotHermitianError,
    NotRealizableError,
    SearchExhaustedError,
    SingularSylvesterError,
    StructurallyImpossibleError,
    TargetCountMismatchError,
    ToleranceAmbiguousError,
    UncontrollableError,
)
from .passive_model import DEFAULT_TOL, PassiveSystem, check_realizability

__all__ = [
    "ScatteringPair",
    "observer_topology",
    "yamamoto_topology",
    "ControllerGains",
    "ClosedLoop",
    "SynthesisResult",
    "static_feedback_blocks",
    "controller_ac",
    "hat_check",
    "lmi_R",
    "LmiVerdict",
    "lmi_feasible",
    "complete_g3",
    "assemble_closed_loop",
    "lemma1_spectral_split",
    "pole_place_injection",
    "synthesize_dfs",
    "corollary1_synthesize",
    "corollary2_synthesize",
]


# ---------------------------------------------------------------------------
# interconnection data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringPair:
    """Unitary routing matrices with their 2x2 block partitions.

    ``s_matrix`` maps the stacked fields ``[y; z]`` (widths ``n_w``, ``n_z``)
    to the controller inputs ``[y'; z']`` (widths ``m1``, ``m2``);
    ``w_matrix`` maps the controller outputs ``[u'; u~']`` back to
    ``[u; u~]`` with the feedback portion ``u`` of width ``n_u``.
    """

    s_matrix: np.ndarray
    w_matrix: np.ndarray
    m1: int
    n_w: int
    n_u: int
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        s = mk.as_cmatrix(self.s_matrix, "S")
        w = mk.as_cmatrix(self.w_matrix, "W")
        if s.shape[0] != s.shape[1]:
            raise DimensionMismatchError(f"S must be square, got {s.shape}")
        if w.shape[0] != w.shape[1]:
            raise DimensionMismatchError(f"W must be square, got {w.shape}")
        if w.shape[0] != s.shape[0]:
            raise DimensionMismatchError(
                f"W width {w.shape[0]} must equal S width {s.shape[0]}"
            )
        if not 0 <= self.m1 <= s.shape[0]:
            raise DimensionMismatchError(f"m1={self.m1} outside S width {s.shape[0]}")
        if not 0 <= self.n_w <= s.shape[1]:
            raise DimensionMismatchError(f"n_w={self.n_w} outside S width {s.shape[1]}")
        if not 0 <= self.n_u <= w.shape[0]:
            raise DimensionMismatchError(f"n_u={self.n_u} outside W width {w.shape[0]}")
        for name, mat in (("S", s), ("W", w)):
            dev = np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0]))
            if dev > self.tol * mk.norm_scale(mat):
                raise DimensionMismatchError(
                    f"{name} is not unitary (deviation {dev:.3e})"
                )
        object.__setattr__(self, "s_matrix", s)
        object.__setattr__(self, "w_matrix", w)

    @property
    def m2(self) -> int:
        return self.s_matrix.shape[0] - self.m1

    @property
    def n_z(self) -> int:
        return self.s_matrix.shape[1] - self.n_w

    @property
    def s11(self) -> np.ndarray:
        return self.s_matrix[: self.m1, : self.n_w]

    @property
    def s12(self) -> np.ndarray:
        return self.s_matrix[: self.m1, self.n_w:]

    @property
    def s21(self) -> np.ndarray:
        return self.s_matrix[self.m1:, : self.n_w]

    @property
    def s22(self) -> np.ndarray:
        return self.s_matrix[self.m1:, self.n_w:]

    @property
    def w11(self) -> np.ndarray:
        return self.w_matrix[: self.n_u, : self.m1]

    @property
    def w12(self) -> np.ndarray:
        return self.w_matrix[: self.n_u, self.m1:]

    @property
    def w21(self) -> np.ndarray:
        return self.w_matrix[self.n_u:, : self.m1]

    @property
    def w22(self) -> np.ndarray:
        return self.w_matrix[self.n_u:, self.m1:]


def observer_topology(n_w: int, n_u: int) -> ScatteringPair:
    """Identity scattering in, swapped routing out.

    The controller sees the plant output directly on its first port and its
    own environment on the second, while the feedback into the plant comes
    from the second controller output.  Requires ``n_z = n_u`` helper noise.
    """
    total = n_w + n_u
    s = np.eye(total, dtype=complex)
    w = np.zeros((total, total), dtype=complex)
    w[:n_u, n_w:] = np.eye(n_u)
    w[n_u:, :n_w] = np.eye(n_w)
    return ScatteringPair(s, w, m1=n_w, n_w=n_w, n_u=n_u)


def yamamoto_topology(n_w: int) -> ScatteringPair:
    """Direct feedback: identity scattering both ways, no helper channel."""
    s = np.eye(n_w, dtype=complex)
    w = np.eye(n_w, dtype=complex)
    return ScatteringPair(s, w, m1=n_w, n_w=n_w, n_u=n_w)


@dataclass(frozen=True)
class ControllerGains:
    """Controller couplings ``G1, G2, G3`` with the derived drift ``a_c``.

    ``realizability_residual`` measures the controller identity
    ``A_c + A_c^H + sum_i G_i G_i^H = 0``; the output gains are fixed to
    ``K = -G1^H`` and ``K~ = -G2^H`` by realizability.
    """

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    a_c: np.ndarray

    def __post_init__(self):
        a_c = mk.as_cmatrix(self.a_c, "A_c")
        n = a_c.shape[0]
        for name, g in (("G1", self.g1), ("G2", self.g2), ("G3", self.g3)):
            g = mk.as_cmatrix(g, name)
            if g.shape[0] != n:
                raise DimensionMismatchError(f"{name} has {g.shape[0]} rows, expected {n}")
            object.__setattr__(self, name.lower(), g)
        object.__setattr__(self, "a_c", a_c)

    @property
    def n(self) -> int:
        return self.a_c.shape[0]

    @property
    def k_out(self) -> np.ndarray:
        return -self.g1.conj().T

    @property
    def k_tilde_out(self) -> np.ndarray:
        return -self.g2.conj().T

    def realizability_residual(self) -> float:
        acc = self.a_c + self.a_c.conj().T
        for g in (self.g1, self.g2, self.g3):
            acc = acc + g @ g.conj().T
        return float(np.linalg.norm(acc)) / mk.norm_scale(self.a_c)

    def as_passive_system(self) -> PassiveSystem:
        blocks = (("y'", self.g1), ("z'", self.g2), ("v", self.g3))
        return PassiveSystem(
            self.a_c,
            tuple((lab, g) for lab, g in blocks),
            tuple((lab, -g.conj().T) for lab, g in blocks),
        )


# ---------------------------------------------------------------------------
# plant-side helpers
# ---------------------------------------------------------------------------

def static_feedback_blocks(plant: PassiveSystem) -> tuple[np.ndarray, np.ndarray]:
    """Split plant inputs into static (``w`` and ``f``, merged) and feedback (``u``)."""
    static = [b for lab, b in plant.b_blocks if lab != "u"]
    if not static:
        raise DimensionMismatchError("plant declares no static channel ('w' or 'f')")
    b1 = np.hstack(static)
    try:
        b2 = plant.b("u")
    except KeyError:
        raise DimensionMismatchError("plant declares no feedback channel 'u'") from None
    return b1, b2


def _conform(plant: PassiveSystem, sw: ScatteringPair, g1, g2):
    b1, b2 = static_feedback_blocks(plant)
    g1 = mk.as_cmatrix(g1, "G1")
    g2 = mk.as_cmatrix(g2, "G2")
    n = plant.n
    if sw.n_w != b1.shape[1]:
        raise DimensionMismatchError(
            f"S expects {sw.n_w} static inputs, plant has {b1.shape[1]}"
        )
    if sw.n_u != b2.shape[1]:
        raise DimensionMismatchError(
            f"W feeds back {sw.n_u} channels, plant accepts {b2.shape[1]}"
        )
    if g1.shape != (n, sw.m1):
        raise DimensionMismatchError(f"G1 must be {n}x{sw.m1}, got {g1.shape}")
    if g2.shape != (n, sw.m2):
        raise DimensionMismatchError(f"G2 must be {n}x{sw.m2}, got {g2.shape}")
    return b1, b2, g1, g2


def _phi(sw: ScatteringPair) -> np.ndarray:
    return sw.w11 @ sw.s11 + sw.w12 @ sw.s21


def controller_ac(plant: PassiveSystem, sw: ScatteringPair, g1, g2) -> np.ndarray:
    """Controller drift that decouples the closed-loop spectrum.

    ``A_c = A_p - B2 Phi B1^H + (G1 S11 + G2 S21) B1^H
    - B2 (W11 G1^H + W12 G2^H)`` with ``Phi = W11 S11 + W12 S21``.
    """
    b1, b2, g1, g2 = _conform(plant, sw, g1, g2)
    ap = plant.a_matrix
    return (
        ap
        - b2 @ _phi(sw) @ b1.conj().T
        + (g1 @ sw.s11 + g2 @ sw.s21) @ b1.conj().T
        - b2 @ (sw.w11 @ g1.conj().T + sw.w12 @ g2.conj().T)
    )


def hat_check(plant: PassiveSystem, sw: ScatteringPair, g1, g2):
    """The two spectral factors of the closed loop.

    ``a_hat`` collects the feedback-path dependence (columns of the gains
    weighted by ``W``), ``a_check`` the output-injection dependence
    (rows weighted by ``S``); together their spectra make up the
    closed-loop spectrum when the controller drift follows
    :func:`controller_ac`.
    """
    b1, b2, g1, g2 = _conform(plant, sw, g1, g2)
    ap = plant.a_matrix
    base = ap - b2 @ _phi(sw) @ b1.conj().T
    a_hat = base - b2 @ (sw.w11 @ g1.conj().T + sw.w12 @ g2.conj().T)
    a_check = base + (g1 @ sw.s11 + g2 @ sw.s21) @ b1.conj().T
    return a_hat, a_check


def lmi_R(plant: PassiveSystem, sw: ScatteringPair, g1, g2) -> np.ndarray:
    """Hermitian part of the controller drift identity.

    Equals ``A_c + A_c^H`` for the drift of :func:`controller_ac`; the
    feasibility test asks for ``R + G1 G1^H + G2 G2^H <= 0`` so that a
    coupling ``G3`` can absorb the remainder.
    """
    b1, b2, g1, g2 = _conform(plant, sw, g1, g2)
    phi = _phi(sw)
    r = (
        -b1 @ b1.conj().T
        - b2 @ b2.conj().T
        - b2 @ phi @ b1.conj().T
        - b1 @ phi.conj().T @ b2.conj().T
        + (g1 @ sw.s11 + g2 @ sw.s21) @ b1.conj().T
        + b1 @ (sw.s11.conj().T @ g1.conj().T + sw.s21.conj().T @ g2.conj().T)
        - b2 @ (sw.w11 @ g1.conj().T + sw.w12 @ g2.conj().T)
        - (g1 @ sw.w11.conj().T + g2 @ sw.w12.conj().T) @ b2.conj().T
    )
    return mk.hermitian_part(r)


@dataclass(frozen=True)
class LmiVerdict:
    feasible: bool
    witness: float


def lmi_feasible(r_matrix, g1, g2, tol: float = DEFAULT_TOL) -> LmiVerdict:
    """Test ``R + G1 G1^H + G2 G2^H <= 0``.

    By a Schur complement this is equivalent to negative semidefiniteness
    of the bordered block matrix ``[[R, G1, G2], [G1^H, -I, 0],
    [G2^H, 0, -I]]``; the reduced form is what gets tested.  ``witness`` is
    the largest eigenvalue of the reduced Hermitian matrix.
    """
    r = mk.as_cmatrix(r_matrix, "R")
    g1 = mk.as_cmatrix(g1, "G1")
    g2 = mk.as_cmatrix(g2, "G2")
    dev = np.linalg.norm(r - r.conj().T)
    if dev > tol * mk.norm_scale(r):
        raise NotHermitianError(f"R deviates from Hermitian by {dev:.3e}")
    reduced = mk.hermitian_part(r) + g1 @ g1.conj().T + g2 @ g2.conj().T
    witness = float(np.linalg.eigvalsh(reduced).max())
    return LmiVerdict(witness <= tol * mk.norm_scale(reduced), witness)


def complete_g3(r_matrix, g1, g2, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coupling that balances the controller identity exactly.

    Returns the PSD principal root of ``-(R + G1 G1^H + G2 G2^H)``; raises
    :class:`NotPSDError` when the inequality is infeasible.
    """
    r = mk.as_cmatrix(r_matrix, "R")
    g1 = mk.as_cmatrix(g1, "G1")
    g2 = mk.as_cmatrix(g2, "G2")
    reduced = mk.hermitian_part(r) + g1 @ g1.conj().T + g2 @ g2.conj().T
    return mk.psd_sqrt(-reduced, tol)


def _g3_best_effort(r_matrix, g1, g2) -> np.ndarray:
    """Like :func:`complete_g3` but clamps an infeasible remainder to zero."""
    reduced = mk.hermitian_part(r_matrix) + g1 @ g1.conj().T + g2 @ g2.conj().T
    w, u = np.linalg.eigh(-reduced)
    return (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedLoop:
    """Interconnected plant/controller state-space with partition metadata."""

    a_cl: np.ndarray
    b_cl: np.ndarray
    n_plant: int
    n_controller: int
    width_w: int
    width_z: int
    width_v: int
    realizability_residual: float

    def as_passive_system(self) -> PassiveSystem:
        """View the loop as one passive system with channels (w, z, v)."""
        cuts = np.cumsum([self.width_w, self.width_z])
        bw, bz, bv = np.hsplit(self.b_cl, cuts)
        blocks = (("w", bw), ("z", bz), ("v", bv))
        return PassiveSystem(
            self.a_cl,
            tuple((lab, b) for lab, b in blocks),
            tuple((lab, -b.conj().T) for lab, b in blocks),
        )


def assemble_closed_loop(
    plant: PassiveSystem,
    gains: ControllerGains,
    sw: ScatteringPair,
    tol: float = DEFAULT_TOL,
    verify: bool = True,
) -> ClosedLoop:
    """Interconnect a plant and controller through the scattering pair.

    With ``verify=True`` (default) both parts must satisfy their
    realizability identities; the closed loop then satisfies
    ``A_cl + A_cl^H + B_cl B_cl^H = 0`` automatically and the residual is
    recorded.  ``verify=False`` assembles diagnostic loops from
    non-realizable parts and only records the residual.
    """
    b1, b2, g1, g2 = _conform(plant, sw, gains.g1, gains.g2)
    if verify:
        rep = check_realizability(plant, tol)
        if not rep.ok:
            raise NotRealizableError(
                f"plant realizability residual {max(rep.residual, rep.c_residual):.3e}"
            )
        cres = gains.realizability_residual()
        if cres > tol:
            raise NotRealizableError(f"controller realizability residual {cres:.3e}")
    ap = plant.a_matrix
    a_c = gains.a_c
    n, nc = plant.n, gains.n
    phi = _phi(sw)
    psi = sw.w11 @ g1.conj().T + sw.w12 @ g2.conj().T
    gam = g1 @ sw.s11 + g2 @ sw.s21
    theta = sw.w11 @ sw.s12 + sw.w12 @ sw.s22
    lam = g1 @ sw.s12 + g2 @ sw.s22
    a_cl = np.block([
        [ap - b2 @ phi @ b1.conj().T, -b2 @ psi],
        [-gam @ b1.conj().T, a_c],
    ])
    n_v = gains.g3.shape[1]
    b_cl = np.block([
        [b1 + b2 @ phi, b2 @ theta, np.zeros((n, n_v), dtype=complex)],
        [gam, lam, gains.g3],
    ])
    residual = float(
        np.linalg.norm(a_cl + a_cl.conj().T + b_cl @ b_cl.conj().T)
    ) / mk.norm_scale(a_cl)
    if verify and residual > max(tol, 1e2 * np.finfo(float).eps * (n + nc)):
        raise NotRealizableError(f"closed-loop residual {residual:.3e} exceeds {tol:.1e}")
    return ClosedLoop(
        a_cl=a_cl,
        b_cl=b_cl,
        n_plant=n,
        n_controller=nc,
        width_w=b1.shape[1],
        width_z=sw.n_z,
        width_v=n_v,
        realizability_residual=residual,
    )


def lemma1_spectral_split(closed: ClosedLoop, a_hat, a_check, tol: float = 1e-7) -> bool:
    """Multiset equality of the closed-loop spectrum with the two factors."""
    a_hat = mk.as_cmatrix(a_hat, "a_hat")
    a_check = mk.as_cmatrix(a_check, "a_check")
    ev_cl = np.linalg.eigvals(closed.a_cl)
    ev_split = np.concatenate([np.linalg.eigvals(a_hat), np.linalg.eigvals(a_check)])
    ok, _ = mk.spectra_match(ev_cl, ev_split, tol * mk.norm_scale(closed.a_cl))
    return ok


# ---------------------------------------------------------------------------
# pole placement
# ---------------------------------------------------------------------------

def _poly_matrix(a: np.ndarray, roots: np.ndarray) -> np.ndarray:
    out = np.eye(a.shape[0], dtype=complex)
    for r in roots:
        out = out @ (a - r * np.eye(a.shape[0]))
    return out


def pole_place_injection(a, cd, targets, tol: float = 1e-8, seed: int = 0) -> np.ndarray:
    """Find ``G`` such that ``A + G Cd`` has the prescribed spectrum.

    Single-output pairs use the characteristic-polynomial (Ackermann)
    method on the dual pair; wider ``Cd`` uses a Sylvester-equation
    eigenvector assignment with seeded random right factors.  The result is
    always verified by recomputing the spectrum.
    """
    a = mk.as_cmatrix(a, "A")
    cd = mk.as_cmatrix(cd, "Cd")
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"A must be square, got {a.shape}")
    if cd.shape[1] != n:
        raise DimensionMismatchError(f"Cd has {cd.shape[1]} columns, expected {n}")
    targets = np.asarray(targets, dtype=complex).ravel()
    if targets.size != n:
        raise TargetCountMismatchError(f"{targets.size} targets for dimension {n}")
    if not controllable(a.conj().T, cd.conj().T, min(tol, DF_TOL)):
        raise UncontrollableError("(A^H, Cd^H) is not controllable; placement impossible")
    scale = max(mk.norm_scale(a), float(np.abs(targets).max(initial=0.0)))
    match_tol = max(tol, 1e-8) * scale
    ok, _ = mk.spectra_match(np.linalg.eigvals(a), targets, match_tol)
    if ok:
        return np.zeros((n, cd.shape[0]), dtype=complex)

    ad = a.conj().T
    bd = cd.conj().T
    m = cd.shape[0]
    if m == 1:
        # Ackermann on the dual single-input pair
        ctrb = np.hstack([np.linalg.matrix_power(ad, k) @ bd for k in range(n)])
        q = _poly_matrix(ad, targets.conj())
        e_n = np.zeros((1, n), dtype=complex)
        e_n[0, -1] = 1.0
        try:
            f = -(e_n @ np.linalg.solve(ctrb, q))
        except np.linalg.LinAlgError as exc:
            raise UncontrollableError(f"dual Krylov matrix singular: {exc}") from exc
        g = f.conj().T
        got = np.linalg.eigvals(a + g @ cd)
        ok, worst = mk.spectra_match(got, targets, match_tol)
        if not ok:
            raise ConvergenceFailure(
                f"placement verification failed (worst distance {worst:.3e})"
            )
        return g

    lam = np.diag(targets.conj())
    rng = np.random.default_rng(seed)
    last_err = None
    for _ in range(8):
        gbar = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        try:
            x = sla.solve_sylvester(ad, -lam, -bd @ gbar)
            f = gbar @ np.linalg.inv(x)
        except np.linalg.LinAlgError as exc:
            last_err = exc
            continue
        g = f.conj().T
        got = np.linalg.eigvals(a + g @ cd)
        ok, worst = mk.spectra_match(got, targets, match_tol)
        if ok:
            return g
        last_err = ConvergenceFailure(f"worst placement distance {worst:.3e}")
    if isinstance(last_err, np.linalg.LinAlgError):
        raise SingularSylvesterError(
            f"targets too close to the spectrum of A for the Sylvester solve: {last_err}"
        )
    raise ConvergenceFailure(f"placement failed after retries: {last_err}")


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisResult:
    """Gains plus the evidence that they create the requested DF modes."""

    gains: ControllerGains
    a_hat: np.ndarray
    a_check: np.ndarray
    r_matrix: np.ndarray
    lmi_witness: float
    feasible: bool
    spectra_in_closed_lhp: bool
    axis_mode_count: int
    df_report: DfsReport | None
    closed: ClosedLoop | None
    iterations: int
    seed: int
    constraint_residual: float | None = None

    @property
    def accepted(self) -> bool:
        return bool(
            self.feasible
            and self.spectra_in_closed_lhp
            and self.axis_mode_count >= 1
            and (self.constraint_residual is None or self.constraint_residual <= 1e-9)
        )


def _spectra_conditions(a_hat, a_check, df_tol):
    scale = max(mk.norm_scale(a_hat), mk.norm_scale(a_check))
    band = df_tol * scale
    ev = np.concatenate([np.linalg.eigvals(a_hat), np.linalg.eigvals(a_check)])
    in_lhp = bool(np.all(ev.real <= band))
    axis = int(np.sum(np.abs(ev.real) <= band))
    return in_lhp, axis


def _package(plant, sw, g1, g2, seed, iterations, tol, df_tol) -> SynthesisResult:
    a_hat, a_check = hat_check(plant, sw, g1, g2)
    r = lmi_R(plant, sw, g1, g2)
    verdict = lmi_feasible(r, g1, g2, tol)
    g3 = _g3_best_effort(r, g1, g2)
    a_c = controller_ac(plant, sw, g1, g2)
    gains = ControllerGains(g1, g2, g3, a_c)
    closed = assemble_closed_loop(plant, gains, sw, tol, verify=False)
    try:
        report = dfs_report(closed.as_passive_system(), df_tol)
    except (ValueError, ToleranceAmbiguousError):
        report = None  # candidate loop not passive or rank ill-separated
    in_lhp, axis = _spectra_conditions(a_hat, a_check, df_tol)
    return SynthesisResult(
        gains=gains,
        a_hat=a_hat,
        a_check=a_check,
        r_matrix=r,
        lmi_witness=verdict.witness,
        feasible=verdict.feasible,
        spectra_in_closed_lhp=in_lhp,
        axis_mode_count=axis,
        df_report=report,
        closed=closed,
        iterations=iterations,
        seed=seed,
    )


def _axis_targets(a_prime: np.ndarray, k: int, df_tol: float):
    """Move the k least-damped eigenvalues onto the axis, reflect the rest left."""
    ev = np.linalg.eigvals(a_prime)
    order = np.argsort(-ev.real, kind="stable")
    targets = ev.copy()
    for rank_, idx in enumerate(order):
        if rank_ < k:
            targets[idx] = 1j * ev[idx].imag
        elif ev[idx].real > 0:
            targets[idx] = -abs(ev[idx].real) + 1j * ev[idx].imag
    return targets


def _gain_supports(plant, sw):
    b1, b2 = static_feedback_blocks(plant)
    sig = np.vstack([sw.s11, sw.s21])
    wt = np.hstack([sw.w11, sw.w12])
    cd = sig @ b1.conj().T
    eps = 1e-12 * max(1.0, float(np.abs(cd).max(initial=0.0)), float(np.abs(wt).max(initial=0.0)))
    check_cols = np.linalg.norm(cd, axis=1) > eps
    hat_cols = np.linalg.norm(wt, axis=0) > eps
    return b1, b2, cd, wt, check_cols, hat_cols


def synthesize_dfs(
    plant: PassiveSystem,
    sw: ScatteringPair,
    target_df: int,
    seed: int = 0,
    max_iters: int = 40,
    tol: float = DEFAULT_TOL,
    df_tol: float = DF_TOL,
    place: str = "check",
) -> SynthesisResult:
    """Search gains ``G1, G2`` that create ``target_df`` decoherence-free modes.

    Topologies where the two spectral factors depend on disjoint gain
    columns are solved exactly: the placed factor gets an eigenvalue
    assignment onto the imaginary axis and the other factor's columns take
    their witness-minimizing value.  Other topologies fall back to a
    seeded derivative-free search (simplex restarts) over the real
    parameterization of the gains.  Results are deterministic for a given
    seed.  Raises :class:`SearchExhaustedError` carrying the best attempt
    when the inequality cannot be met.
    """
    if place not in ("check", "hat"):
        raise ValueError(f"place must be 'check' or 'hat', got {place!r}")
    b1, b2, cd, wt, check_cols, hat_cols = _gain_supports(plant, sw)
    ap = plant.a_matrix
    if not controllable(ap, b2 @ wt, df_tol):
        raise StructurallyImpossibleError(
            "(A_p, B2 [W11 W12]) is not controllable; gains cannot shape the spectrum"
        )
    if not controllable(ap.conj().T, b1 @ np.vstack([sw.s11, sw.s21]).conj().T, df_tol):
        raise StructurallyImpossibleError(
            "(A_p^H, B1 [S11^H S21^H]) is not controllable; gains cannot shape the spectrum"
        )
    a_prime = ap - b2 @ _phi(sw) @ b1.conj().T
    n = plant.n
    mtot = sw.m1 + sw.m2

    decoupled = not np.any(check_cols & hat_cols)
    if decoupled:
        g = np.zeros((n, mtot), dtype=complex)
        targets = _axis_targets(a_prime, target_df, df_tol)
        if place == "check":
            if np.any(check_cols):
                gc = pole_place_injection(a_prime, cd[check_cols, :], targets,
                                          tol=df_tol, seed=seed)
                g[:, check_cols] = gc
            g[:, hat_cols] = b2 @ wt[:, hat_cols]
        else:
            if np.any(hat_cols):
                bf = b2 @ wt[:, hat_cols]
                gdual = pole_place_injection(a_prime.conj().T, bf.conj().T,
                                             targets.conj(), tol=df_tol, seed=seed)
                g[:, hat_cols] = -gdual
            g[:, check_cols] = -cd[check_cols, :].conj().T
        g1, g2 = g[:, : sw.m1], g[:, sw.m1:]
        result = _package(plant, sw, g1, g2, seed, 1, tol, df_tol)
        achieved = result.df_report.df_dimension if result.df_report else 0
        if result.feasible and result.spectra_in_closed_lhp and achieved >= target_df:
            return result
        raise SearchExhaustedError(
            f"exact placement gives witness {result.lmi_witness:.6g}; "
            "no feasible completion at this tolerance",
            best=result,
        )

    # general topology: seeded simplex restarts over Re/Im of the gains
    rng = np.random.default_rng(seed)
    dim = 2 * n * mtot
    gain_scale = max(1.0, float(np.linalg.norm(b1)), float(np.linalg.norm(b2)))
    band = df_tol * mk.norm_scale(a_prime)

    def unpack(x):
        z = x[: n * mtot] + 1j * x[n * mtot:]
        g = z.reshape(n, mtot)
        return g[:, : sw.m1], g[:, sw.m1:]

    def cost(x) -> float:
        g1, g2 = unpack(x)
        a_hat, a_check = hat_check(plant, sw, g1, g2)
        placed = a_check if place == "check" else a_hat
        other = a_hat if place == "check" else a_check
        evp = np.linalg.eigvals(placed)
        order = np.argsort(np.abs(evp.real), kind="stable")
        res = float(np.sum(np.abs(evp.real[order[:target_df]])))
        rest = evp.real[order[target_df:]]
        hinge = float(np.sum(np.clip(rest, 0.0, None)))
        hinge += float(np.sum(np.clip(np.linalg.eigvals(other).real, 0.0, None)))
        r = lmi_R(plant, sw, g1, g2)
        reduced = r + g1 @ g1.conj().T + g2 @ g2.conj().T
        wit = float(np.linalg.eigvalsh(mk.hermitian_part(reduced)).max())
        return res + 10.0 * hinge + max(0.0, wit)

    best = None
    best_cost = np.inf
    for restart in range(max(1, max_iters)):
        x0 = rng.standard_normal(dim) * gain_scale
        opt = sopt.minimize(cost, x0, method="Nelder-Mead",
                            options={"maxiter": 200 * dim, "fatol": 1e-12, "xatol": 1e-10})
        g1, g2 = unpack(opt.x)
        result = _package(plant, sw, g1, g2, seed, restart + 1, tol, df_tol)
        achieved = result.df_report.df_dimension if result.df_report else 0
        if result.feasible and result.spectra_in_closed_lhp and achieved >= target_df:
            return result
        if opt.fun < best_cost:
            best_cost = float(opt.fun)
            best = result
    raise SearchExhaustedError(
        f"no feasible gains after {max_iters} restarts (best witness "
        f"{best.lmi_witness if best else float('nan'):.6g})",
        best=best,
    )


# ---------------------------------------------------------------------------
# fixed-topology specializations
# ---------------------------------------------------------------------------

def corollary1_synthesize(
    plant: PassiveSystem,
    g1,
    g2,
    tol: float = DEFAULT_TOL,
    df_tol: float = DF_TOL,
) -> SynthesisResult:
    """Evaluate given gains on the observer topology via its reduced formulas.

    With identity scattering in and swapped routing out the general
    expressions collapse to ``A_c = A_p + G1 B1^H - B2 G2^H``,
    ``a_hat = A_p - B2 G2^H``, ``a_check = A_p + G1 B1^H`` and
    ``R = -B1 B1^H - B2 B2^H + G1 B1^H + B1 G1^H - B2 G2^H - G2 B2^H``.
    The returned matrices must agree with the general path on this
    topology.
    """
    b1, b2 = static_feedback_blocks(plant)
    g1 = mk.as_cmatrix(g1, "G1")
    g2 = mk.as_cmatrix(g2, "G2")
    n = plant.n
    if g1.shape != (n, b1.shape[1]):
        raise DimensionMismatchError(f"G1 must be {n}x{b1.shape[1]}, got {g1.shape}")
    if g2.shape != (n, b2.shape[1]):
        raise DimensionMismatchError(f"G2 must be {n}x{b2.shape[1]}, got {g2.shape}")
    ap = plant.a_matrix
    a_hat = ap - b2 @ g2.conj().T
    a_check = ap + g1 @ b1.conj().T
    a_c = ap + g1 @ b1.conj().T - b2 @ g2.conj().T
    r = mk.hermitian_part(
        -b1 @ b1.conj().T - b2 @ b2.conj().T
        + g1 @ b1.conj().T + b1 @ g1.conj().T
        - b2 @ g2.conj().T - g2 @ b2.conj().T
    )
    verdict = lmi_feasible(r, g1, g2, tol)
    g3 = _g3_best_effort(r, g1, g2)
    gains = ControllerGains(g1, g2, g3, a_c)
    sw = observer_topology(b1.shape[1], b2.shape[1])
    closed = assemble_closed_loop(plant, gains, sw, tol, verify=False)
    report = dfs_report(closed.as_passive_system(), df_tol)
    in_lhp, axis = _spectra_conditions(a_hat, a_check, df_tol)
    return SynthesisResult(
        gains=gains,
        a_hat=a_hat,
        a_check=a_check,
        r_matrix=r,
        lmi_witness=verdict.witness,
        feasible=verdict.feasible,
        spectra_in_closed_lhp=in_lhp,
        axis_mode_count=axis,
        df_report=report,
        closed=closed,
        iterations=1,
        seed=0,
    )


def corollary2_synthesize(
    plant: PassiveSystem,
    g1,
    tol: float = DEFAULT_TOL,
    df_tol: float = DF_TOL,
) -> SynthesisResult:
    """Evaluate a single gain on the direct-feedback topology.

    Identity scattering both ways with ``G2 = G3 = 0`` forces the exact
    balance ``-(B1+B2)(B1+B2)^H + G1 (B1-B2)^H + (B1-B2) G1^H
    + G1 G1^H = 0``; its residual is reported alongside the usual spectral
    conditions.  Reduced formulas: ``a_hat = A_p - B2 B1^H - B2 G1^H``,
    ``a_check = A_p - B2 B1^H + G1 B1^H``.
    """
    b1, b2 = static_feedback_blocks(plant)
    g1 = mk.as_cmatrix(g1, "G1")
    n = plant.n
    if b2.shape[1] != b1.shape[1]:
        raise DimensionMismatchError(
            "direct feedback needs matching static and feedback widths, got "
            f"{b1.shape[1]} vs {b2.shape[1]}"
        )
    if g1.shape != (n, b1.shape[1]):
        raise DimensionMismatchError(f"G1 must be {n}x{b1.shape[1]}, got {g1.shape}")
    ap = plant.a_matrix
    base = ap - b2 @ b1.conj().T
    a_hat = base - b2 @ g1.conj().T
    a_check = base + g1 @ b1.conj().T
    a_c = base + g1 @ b1.conj().T - b2 @ g1.conj().T
    bsum = b1 + b2
    bdif = b1 - b2
    constraint = (
        -bsum @ bsum.conj().T
        + g1 @ bdif.conj().T
        + bdif @ g1.conj().T
        + g1 @ g1.conj().T
    )
    c_res = float(np.linalg.norm(constraint)) / mk.norm_scale(a_c)
    g2 = np.zeros((n, 0), dtype=complex)
    g3 = np.zeros((n, 0), dtype=complex)
    r = mk.hermitian_part(
        -b1 @ b1.conj().T - b2 @ b2.conj().T
        - b2 @ b1.conj().T - b1 @ b2.conj().T
        + g1 @ b1.conj().T + b1 @ g1.conj().T
        - b2 @ g1.conj().T - g1 @ b2.conj().T
    )
    verdict = lmi_feasible(r, g1, g2, tol)
    gains = ControllerGains(g1, g2, g3, a_c)
    sw = yamamoto_topology(b1.shape[1])
    closed = assemble_closed_loop(plant, gains, sw, tol, verify=False)
    report = dfs_report(closed.as_passive_system(), df_tol)
    in_lhp, axis = _spectra_conditions(a_hat, a_check, df_tol)
    return SynthesisResult(
        gains=gains,
        a_hat=a_hat,
        a_check=a_check,
        r_matrix=r,
        lmi_witness=verdict.witness,
        feasible=verdict.feasible,
        spectra_in_closed_lhp=in_lhp,
        axis_mode_count=axis,
        df_report=report,
        closed=closed,
        iterations=1,
        seed=0,
        constraint_residual=c_res,
    )
