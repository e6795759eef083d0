"""Synthesis and certification of decoherence-free subsystems in passive
linear quantum networks via coherent feedback."""

from . import errors
from .matrixkit import (
    Spectrum,
    eigenvalues,
    is_negative_semidefinite,
    psd_sqrt,
    rank,
    solve_lyapunov,
    spectra_match,
)
from .passive_model import (
    HamiltonianCoupling,
    PassiveSystem,
    PassivityCertificate,
    check_passivity,
    check_realizability,
    realize,
    recover_hamiltonian,
)
from .analysis import (
    DfsReport,
    KalmanDecomposition,
    controllable,
    dfs_monotonicity_check,
    dfs_report,
    kalman_decompose,
    observable,
    open_loop_no_go,
)
from .synthesis import (
    ClosedLoop,
    ControllerGains,
    ScatteringPair,
    SynthesisResult,
    assemble_closed_loop,
    complete_g3,
    controller_ac,
    corollary1_synthesize,
    corollary2_synthesize,
    hat_check,
    lemma1_spectral_split,
    lmi_R,
    lmi_feasible,
    observer_topology,
    pole_place_injection,
    synthesize_dfs,
    yamamoto_topology,
)
from .netformat import NetworkDescription, parse_network, serialize_network
from .moments import (
    Trajectory,
    dfs_dynamic_verify,
    evolve_covariance,
    evolve_mean,
    trajectory_csv,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Spectrum",
    "eigenvalues",
    "is_negative_semidefinite",
    "psd_sqrt",
    "rank",
    "solve_lyapunov",
    "spectra_match",
    "HamiltonianCoupling",
    "PassiveSystem",
    "PassivityCertificate",
    "check_passivity",
    "check_realizability",
    "realize",
    "recover_hamiltonian",
    "DfsReport",
    "KalmanDecomposition",
    "controllable",
    "dfs_monotonicity_check",
    "dfs_report",
    "kalman_decompose",
    "observable",
    "open_loop_no_go",
    "ClosedLoop",
    "ControllerGains",
    "ScatteringPair",
    "SynthesisResult",
    "assemble_closed_loop",
    "complete_g3",
    "controller_ac",
    "corollary1_synthesize",
    "corollary2_synthesize",
    "hat_check",
    "lemma1_spectral_split",
    "lmi_R",
    "lmi_feasible",
    "observer_topology",
    "pole_place_injection",
    "synthesize_dfs",
    "yamamoto_topology",
    "NetworkDescription",
    "parse_network",
    "serialize_network",
    "Trajectory",
    "dfs_dynamic_verify",
    "evolve_covariance",
    "evolve_mean",
    "trajectory_csv",
]
