"""Certification that survives postselection on detection events.

If only a fraction ``p`` of the runs is kept, the reconstructed state
``rho_p`` and the state ``rho`` actually produced by the network satisfy
``rho - p * rho_p >= 0``.  Adding that constraint to the ring inflation gives
the largest fidelity an adversary can fake at detection rate ``p``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .inflation_sdp.backends import SolverBackend, get_backend, solve_sdp
from .inflation_sdp.basis import embed_strings
from .inflation_sdp.problem import SdpProblem
from .inflation_sdp.ring import ALL_PPT, QUBITS3, _is_real, add_ring_constraints
from .qlinalg import DomainError

log = logging.getLogger(__name__)

EPS_ONE = 1e-4
INITIAL_BRACKET = (0.3, 1.0)


def build_postselected(target, p: float, *, real: bool | None = None, symmetry_reduction: bool = True,
                       ppt: Sequence[str] = ALL_PPT) -> SdpProblem:
    """Maximize ``<target| rho_p |target>`` subject to the ring inflation and ``tau_(A1B1C1) - p rho_p >= 0``."""
    if not 0 < p <= 1:
        raise DomainError(f"detection probability {p} outside (0, 1]")
    t = np.asarray(target, dtype=complex).ravel()
    if t.size != 8 or abs(np.linalg.norm(t) - 1) > 1e-9:
        raise DomainError("target must be a unit vector with 8 amplitudes")
    if real is None:
        real = _is_real(t)
    prob = SdpProblem("postselected_ring_inflation")
    add_ring_constraints(prob, real, symmetry_reduction, ppt)
    tau = prob.blocks["tau"]
    rho_p = prob.add_block("rho_p", QUBITS3, real)
    gap = prob.add_block("gap", QUBITS3, real)
    own = np.arange(len(rho_p.basis))
    itau = tau.basis.index(embed_strings(rho_p.basis.strings, (0, 1, 2), 6))
    prob.add_constraint("rho_p_trace", [("rho_p", rho_p.basis.identity_index(), 1.0)], [1.0])
    prob.add_constraint("postselection_gap", [("gap", own, 1.0), ("tau", itau, -1.0), ("rho_p", own, p)],
                        np.zeros(len(own)))
    prob.set_objective({"rho_p": rho_p.basis.functional(np.outer(t, t.conj()))}, "maximize")
    prob.metadata.update(target=[[float(v.real), float(v.imag)] for v in t], p=float(p), real=bool(real),
                         symmetry_reduction=bool(symmetry_reduction), ppt=list(ppt))
    return prob


@dataclass
class ScanSample:
    p: float
    max_fidelity: float | None
    status: str


@dataclass
class PostselectionScan:
    target: str
    tol_p: float
    samples: list[ScanSample] = field(default_factory=list)
    p_critical: float | None = None
    bracket: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "tol_p": self.tol_p,
            "p_critical": self.p_critical,
            "samples": [{"p": s.p, "max_fidelity": s.max_fidelity, "status": s.status} for s in self.samples],
        }


def max_postselected_fidelity(target, p: float, backend: SolverBackend | None = None, **build_kw) -> ScanSample:
    sol = solve_sdp(build_postselected(target, p, **build_kw), backend)
    return ScanSample(float(p), sol.objective if sol.ok else None, sol.status)


def _solve_point(args) -> ScanSample:
    target, p, backend_name = args
    return max_postselected_fidelity(target, p, get_backend(backend_name))


def critical_probability(target, tol_p: float = 0.01, backend: SolverBackend | None = None, *,
                         name: str = "custom", jobs: int = 1) -> PostselectionScan:
    """Bisect for the smallest detection rate at which the fidelity bound drops below one.

    ``p_critical`` is the midpoint of the final bracket, so it is within
    ``tol_p / 2`` of the threshold.  A failed solve ends the scan with
    ``p_critical = None``.  With ``jobs > 1`` the two initial endpoints are
    solved in parallel.
    """
    if tol_p < 1e-3:
        raise DomainError("tol_p must be at least 1e-3")
    backend = backend or get_backend()
    scan = PostselectionScan(name, float(tol_p))
    lo, hi = INITIAL_BRACKET

    def record(samples):
        scan.samples.extend(samples)
        scan.samples.sort(key=lambda s: s.p)
        return all(s.max_fidelity is not None for s in samples)

    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            first = list(pool.map(_solve_point, [(target, q, backend.name) for q in (lo, hi)]))
    else:
        first = [max_postselected_fidelity(target, q, backend) for q in (lo, hi)]
    if not record(first):
        return scan
    f_lo, f_hi = first[0].max_fidelity, first[1].max_fidelity
    if f_hi >= 1 - EPS_ONE:
        log.info("bound reaches one even without postselection; nothing to certify")
        return scan
    while f_lo < 1 - EPS_ONE:
        if lo <= 1e-3:
            log.warning("bound stays below one down to p = %g", lo)
            scan.bracket = (0.0, lo)
            scan.p_critical = lo / 2
            return scan
        hi, lo = lo, lo / 2
        s = max_postselected_fidelity(target, lo, backend)
        if not record([s]):
            return scan
        f_lo = s.max_fidelity
    while hi - lo > tol_p:
        mid = (lo + hi) / 2
        s = max_postselected_fidelity(target, mid, backend)
        if not record([s]):
            return scan
        if s.max_fidelity < 1 - EPS_ONE:
            hi = mid
        else:
            lo = mid
    scan.bracket = (lo, hi)
    scan.p_critical = (lo + hi) / 2
    return scan
