"""Ring-inflation semidefinite relaxation of the network-2 set."""

from .backends import (
    ClarabelBackend,
    ScsBackend,
    SdpSolution,
    SolverBackend,
    SolverUnavailable,
    UnsupportedBackend,
    get_backend,
    solve_sdp,
)
from .problem import InfeasibleConstraints, SdpProblem, presolve
from .ring import (
    ALL_PPT,
    Certification,
    DualWitness,
    InflationCertificate,
    build_ring_inflation,
    certify_state,
    extract_dual_witness,
    solve,
)
