"""Closed-form witnesses of genuine network k-entanglement.

Every state producible by (k-1)-partite sources, local channels and shared
randomness satisfies the inequalities evaluated here, so a violation beyond
``tol`` certifies genuine network k-entanglement.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .qlinalg import DensityMatrix, DomainError, partial_trace, von_neumann_entropy, fidelity_with_pure
from .states import ProductMeasurement, ghz_vector, measure, mutual_information, shannon_entropy

DEFAULT_WITNESS_TOL = 1e-7


@dataclass(frozen=True)
class WitnessReport:
    name: str
    lhs: float
    rhs: float
    tol: float = DEFAULT_WITNESS_TOL

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def violated(self) -> bool:
        return self.margin > self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(margin=self.margin, violated=self.violated)
        return {k: d[k] for k in ("name", "lhs", "rhs", "violated", "margin", "tol")}


def _entropy_of(rho: DensityMatrix, keep) -> float:
    keep = list(keep)
    if len(keep) == rho.num_subsystems:
        return von_neumann_entropy(rho)
    return von_neumann_entropy(partial_trace(rho, keep))


def entropic_witness(rho: DensityMatrix, meas: ProductMeasurement, tol: float = DEFAULT_WITNESS_TOL) -> WitnessReport:
    """Check ``H(a:b) + H(b:c) - H(b) <= S(A) + S(ABC) - S(BC)``."""
    if rho.num_subsystems != 3:
        raise DomainError(f"entropic witness needs 3 parties, got {rho.num_subsystems}")
    p = measure(rho, meas)
    lhs = mutual_information(p, [0], [1]) + mutual_information(p, [1], [2]) - shannon_entropy(p, [1])
    rhs = _entropy_of(rho, [0]) + von_neumann_entropy(rho) - _entropy_of(rho, [1, 2])
    return WitnessReport("entropic", lhs, rhs, tol)


def entropic_witness_k(rho: DensityMatrix, meas: ProductMeasurement, tol: float = DEFAULT_WITNESS_TOL) -> WitnessReport:
    """Chain version for k parties: sum of neighbouring mutual informations minus inner entropies."""
    k = rho.num_subsystems
    if k < 3:
        raise DomainError(f"k-party entropic witness needs k >= 3, got {k}")
    p = measure(rho, meas)
    lhs = sum(mutual_information(p, [i], [i + 1]) for i in range(k - 1))
    lhs -= sum(shannon_entropy(p, [i]) for i in range(1, k - 1))
    rhs = _entropy_of(rho, [0]) + von_neumann_entropy(rho) - _entropy_of(rho, range(1, k))
    return WitnessReport(f"entropic_k{k}", lhs, rhs, tol)


def ghz_fidelity_bound(d: int, k: int = 3) -> float:
    """Largest GHZ_d^k fidelity compatible with the coincidence chain argument."""
    if d < 2 or k < 3:
        raise DomainError(f"bound defined for d >= 2, k >= 3 (got d={d}, k={k})")
    num = d * (3 - k * (d + 1) + k * k * d + 2 * np.sqrt(2 + k * (d - 1) - d))
    den = 1 + 4 * d - 2 * d * k + k * k * d * d
    return float(num / den)


def fidelity_witness(rho: DensityMatrix, d: int, k: int, tol: float = DEFAULT_WITNESS_TOL) -> WitnessReport:
    if rho.dims != (d,) * k:
        raise DomainError(f"state dims {rho.dims} are not {k} systems of dimension {d}")
    return WitnessReport(f"fidelity_ghz_d{d}_k{k}", fidelity_with_pure(rho, ghz_vector(d, k)), ghz_fidelity_bound(d, k), tol)


def lemma_bounds(F: float, d: int) -> tuple[float, float]:
    """Upper bound on ``P(a=y)`` for a system correlated with a GHZ-like block, and the lower bound ``P(a=b) >= F``."""
    if not 0.0 <= F <= 1.0:
        raise DomainError(f"fidelity {F} outside [0, 1]")
    pmax = 1 + (1 / d - 1) * F + 2 * np.sqrt(F * (1 - F) / d)
    return float(pmax), float(F)
