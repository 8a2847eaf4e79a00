"""Ring inflation of the triangle network as a semidefinite relaxation.

Six-qubit variables:

* ``tau`` over (A1, B1, C1, A2, B2, C2): two disjoint copies of the triangle;
* ``gamma`` over (A3, B3, C3, A4, B4, C4): the hexagon obtained by rewiring them.

Both are swap symmetric between their two triples, their marginals agree
wherever the rewiring leaves the sources untouched, and positivity under
partial transposition stands in for separability across cuts that share no
source.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..qlinalg import DensityMatrix, DomainError, HermitianOperator, Tolerances, density_matrix
from .backends import INFEASIBLE, SdpSolution, SolverBackend, UnsupportedBackend, solve_sdp
from .basis import embed_strings
from .problem import Piece, SdpProblem

QUBITS6 = (2,) * 6
QUBITS3 = (2,) * 3
SWAP = (3, 4, 5, 0, 1, 2)

# (kept sites of gamma, transposed position inside the kept marginal)
GAMMA_PPT = {
    "gamma_B4": ((0, 1, 2, 4), 3),
    "gamma_C4": ((1, 2, 3, 5), 3),
    "gamma_A3": ((0, 2, 3, 4), 0),
}
ALL_PPT = ("tau",) + tuple(GAMMA_PPT)

# gamma marginal sites -> tau marginal sites with the same systems in the same order
RING_PAIRINGS = (
    ((0, 1, 3, 4), (0, 1, 3, 4)),  # A3 B3 A4 B4 = A1 B1 A2 B2
    ((1, 2, 4, 5), (1, 2, 4, 5)),  # B3 C3 B4 C4 = B1 C1 B2 C2
    ((2, 3, 5, 0), (2, 0, 5, 3)),  # C3 A4 C4 A3 = C1 A1 C2 A2
)

CERT_TOL = Tolerances(herm=1e-9, trace=1e-6, psd=1e-6, norm=1e-9)


def _swap_isometries() -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the symmetric (36) and antisymmetric (28) subspaces of C^8 (x) C^8."""
    sym, anti = [], []
    for i in range(8):
        for j in range(i, 8):
            v = np.zeros(64)
            if i == j:
                v[8 * i + i] = 1.0
                sym.append(v)
                continue
            v[8 * i + j] = v[8 * j + i] = 1 / np.sqrt(2)
            sym.append(v)
            w = np.zeros(64)
            w[8 * i + j], w[8 * j + i] = 1 / np.sqrt(2), -1 / np.sqrt(2)
            anti.append(w)
    return np.array(sym).T, np.array(anti).T


def _swap_operator() -> np.ndarray:
    f = np.zeros((64, 64))
    for i in range(8):
        for j in range(8):
            f[8 * j + i, 8 * i + j] = 1.0
    return f


def _is_real(a) -> bool:
    return a is None or float(np.abs(np.imag(np.asarray(a))).max(initial=0.0)) < 1e-12


def _pt_signs(basis, sites) -> np.ndarray:
    return np.where(basis.antisym_count(basis.strings, sites) % 2 == 1, -1.0, 1.0)


def add_ring_constraints(prob: SdpProblem, real: bool, symmetry_reduction: bool = True,
                         ppt: Sequence[str] = ALL_PPT) -> None:
    """Declare ``tau`` and ``gamma`` with trace, swap, ring-marginal and PPT constraints."""
    unknown = set(ppt) - set(ALL_PPT)
    if unknown:
        raise ValueError(f"unknown PPT constraints {sorted(unknown)}; choose from {ALL_PPT}")
    tau = prob.add_block("tau", QUBITS6, real)
    gam = prob.add_block("gamma", QUBITS6, real)
    if symmetry_reduction:
        vs, va = _swap_isometries()
        for blk in (tau, gam):
            blk.pieces = [Piece(vs, real), Piece(va, real)]
    strings = tau.basis.strings
    ident = tau.basis.identity_index()
    for name in ("tau", "gamma"):
        prob.add_constraint(f"{name}_trace", [(name, ident, 1.0)], [1.0])
        swapped = tau.basis.index(strings[:, SWAP])
        own = np.arange(len(strings))
        sel = own < swapped
        prob.add_constraint(f"{name}_swap", [(name, own[sel], 1.0), (name, swapped[sel], -1.0)],
                            np.zeros(sel.sum()))
    # tau_(A1B1C1) = tau_(A2B2C2)
    loc3 = prob_local_strings(QUBITS3, real)
    i1 = tau.basis.index(embed_strings(loc3, (0, 1, 2), 6))
    i2 = tau.basis.index(embed_strings(loc3, (3, 4, 5), 6))
    nz = i1 != ident
    prob.add_constraint("triangle_copies", [("tau", i1[nz], 1.0), ("tau", i2[nz], -1.0)], np.zeros(nz.sum()))
    loc4 = prob_local_strings((2,) * 4, real)
    for k, (gs, ts) in enumerate(RING_PAIRINGS):
        ig = gam.basis.index(embed_strings(loc4, gs, 6))
        it = tau.basis.index(embed_strings(loc4, ts, 6))
        nz = ig != ident
        prob.add_constraint(f"ring_marginal_{k}", [("gamma", ig[nz], 1.0), ("tau", it[nz], -1.0)], np.zeros(nz.sum()))
    if "tau" in ppt:
        aux = prob.add_block("tau_pt", QUBITS6, real)
        if symmetry_reduction:
            if real:
                vs, va = _swap_isometries()
                aux.pieces = [Piece(vs, True), Piece(va, True)]
            else:
                # F X F = conj(X) for the partial transpose, so (I + iF)/sqrt2 makes it real symmetric
                aux.pieces = [Piece((np.eye(64) + 1j * _swap_operator()) / np.sqrt(2), True)]
        own = np.arange(len(aux.basis))
        sign = _pt_signs(aux.basis, (3, 4, 5))
        prob.add_constraint("tau_pt_def", [("tau_pt", own, 1.0), ("tau", tau.basis.index(aux.basis.strings), -sign)],
                            np.zeros(len(own)))
    for name, (sites, pos) in GAMMA_PPT.items():
        if name not in ppt:
            continue
        aux = prob.add_block(name, (2,) * 4, real)
        own = np.arange(len(aux.basis))
        parent = gam.basis.index(embed_strings(aux.basis.strings, sites, 6))
        sign = _pt_signs(aux.basis, (pos,))
        prob.add_constraint(f"{name}_def", [(name, own, 1.0), ("gamma", parent, -sign)], np.zeros(len(own)))


def prob_local_strings(dims, real: bool) -> np.ndarray:
    from .basis import ProductBasis

    return ProductBasis(dims, real).strings


def build_ring_inflation(target=None, fixed_rho: DensityMatrix | None = None, *, real: bool | None = None,
                         symmetry_reduction: bool = True, ppt: Sequence[str] = ALL_PPT) -> SdpProblem:
    """Ring-inflation relaxation of the network-2 set for three qubits.

    With ``target`` the problem maximizes ``<target| rho |target>`` over triangle
    marginals ``rho`` of feasible ``tau``; with ``fixed_rho`` it is a
    feasibility problem.  ``real`` restricts every variable to real symmetric
    matrices, which loses nothing when the data are real (complex conjugation
    maps feasible points to feasible points with the same objective); by
    default it is chosen from the data.
    """
    if (target is None) == (fixed_rho is None):
        raise TypeError("provide exactly one of target or fixed_rho")
    if target is not None:
        t = np.asarray(target, dtype=complex).ravel()
        if t.size != 8:
            raise DomainError(f"target must have 8 amplitudes, got {t.size}")
        if abs(np.linalg.norm(t) - 1) > 1e-9:
            raise DomainError("target vector must have unit norm")
        data_real = _is_real(t)
    else:
        if not isinstance(fixed_rho, DensityMatrix) or fixed_rho.dims != QUBITS3:
            raise DomainError("fixed_rho must be a three-qubit DensityMatrix")
        data_real = _is_real(fixed_rho.entries)
    if real is None:
        real = data_real
    elif real and not data_real:
        raise DomainError("real restriction requested for complex data")

    prob = SdpProblem("ring_inflation")
    add_ring_constraints(prob, real, symmetry_reduction, ppt)
    tau = prob.blocks["tau"]
    loc3 = prob_local_strings(QUBITS3, real)
    itau = tau.basis.index(embed_strings(loc3, (0, 1, 2), 6))
    if target is not None:
        rho = prob.add_block("rho", QUBITS3, real)
        prob.add_constraint("rho_marginal", [("rho", np.arange(len(rho.basis)), 1.0), ("tau", itau, -1.0)],
                            np.zeros(len(rho.basis)))
        prob.set_objective({"rho": rho.basis.functional(np.outer(t, t.conj()))}, "maximize")
        prob.metadata["target"] = [[float(v.real), float(v.imag)] for v in t]
    else:
        coords = rho_coords(fixed_rho.entries, real)
        nz = itau != tau.basis.identity_index()
        prob.add_constraint("fixed_marginal", [("tau", itau[nz], 1.0)], coords[nz])
        prob.metadata["fixed_rho"] = True
    prob.metadata.update(real=bool(real), symmetry_reduction=bool(symmetry_reduction), ppt=list(ppt))
    return prob


def rho_coords(rho: np.ndarray, real: bool) -> np.ndarray:
    from .basis import ProductBasis

    return ProductBasis(QUBITS3, real).coords(rho)


@dataclass
class InflationCertificate:
    tau: DensityMatrix | None
    gamma: DensityMatrix | None
    objective_value: float | None
    solver_status: str
    stats: dict = field(default_factory=dict)
    problem: SdpProblem | None = field(default=None, repr=False)
    solution: SdpSolution | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.solver_status in ("optimal", "near_optimal")


def _block_state(prob: SdpProblem, name: str, x: np.ndarray) -> DensityMatrix:
    return density_matrix(prob.block_matrix(name, x), prob.blocks[name].dims, CERT_TOL)


def solve(problem: SdpProblem, backend: SolverBackend | None = None) -> InflationCertificate:
    """Solve a ring-inflation problem and package ``tau``/``gamma`` as a certificate."""
    sol = solve_sdp(problem, backend)
    tau = gamma = None
    if sol.ok:
        try:
            tau = _block_state(problem, "tau", sol.x)
            gamma = _block_state(problem, "gamma", sol.x)
        except DomainError as exc:
            sol.stats["certificate_error"] = str(exc)
            return InflationCertificate(None, None, sol.objective, "numerical_error", sol.stats, problem, sol)
    return InflationCertificate(tau, gamma, sol.objective, sol.status, sol.stats, problem, sol)


@dataclass
class Certification:
    certified_genuine: bool
    certificate: InflationCertificate

    @property
    def verdict(self) -> str:
        return "certified_genuine" if self.certified_genuine else "inconclusive"


def certify_state(rho: DensityMatrix, backend: SolverBackend | None = None, **build_kw) -> Certification:
    """Infeasibility of the relaxation certifies genuine network 3-entanglement; feasibility is inconclusive."""
    if not isinstance(rho, DensityMatrix):
        raise DomainError("certify_state needs a DensityMatrix")
    cert = solve(build_ring_inflation(fixed_rho=rho, **build_kw), backend)
    if cert.solver_status == "numerical_error":
        raise RuntimeError(f"solver failed: {cert.stats}")
    return Certification(cert.solver_status == INFEASIBLE, cert)


@dataclass(frozen=True)
class DualWitness:
    """Linear witness: ``tr(W rho) <= bound`` for every state in the relaxation."""

    operator: HermitianOperator
    bound: float

    def value(self, rho) -> float:
        return self.operator.expectation(rho)

    def violated_by(self, rho, tol: float = 1e-6) -> bool:
        return self.value(rho) > self.bound + tol


def extract_dual_witness(cert: InflationCertificate) -> DualWitness:
    """Witness ``W = T + Z`` from the dual multiplier ``Z`` of the redundant ``rho`` positivity cone.

    Every feasible point obeys ``tr(T rho) + tr(Z rho) + (other dual terms >= 0) = dual value``,
    so ``tr(W rho) <= dual value`` across the relaxation, with equality at the optimizer.
    """
    sol = cert.solution
    prob = cert.problem
    if sol is None or prob is None or not cert.ok:
        raise ValueError(f"no optimal solution to take a dual from (status {cert.solver_status})")
    if "rho" not in prob.blocks or prob.objective is None:
        raise ValueError("dual witnesses exist only for target (fidelity) problems")
    if sol.z is None or sol.dual_bound is None:
        raise UnsupportedBackend("backend returned no dual solution")
    z_rho = sol.lmi.block_dual("rho", sol.z)
    t = np.array([complex(re_, im_) for re_, im_ in prob.metadata["target"]])
    w = np.outer(t, t.conj()) + z_rho
    w = (w + w.conj().T) / 2
    return DualWitness(HermitianOperator(QUBITS3, w), float(sol.dual_bound))
