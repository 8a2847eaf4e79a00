"""Reference states, local measurements and classical information quantities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qlinalg import (
    DEFAULT_TOL,
    DensityMatrix,
    DomainError,
    HermitianOperator,
    _entropy_bits,
    _validate_selector,
    pure_state,
    random_unitary,
)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint pmf of discrete variables; ``probabilities`` is flat, row-major over ``cardinalities``."""

    cardinalities: tuple[int, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        card = tuple(int(c) for c in self.cardinalities)
        p = np.array(self.probabilities, dtype=float).ravel()
        if any(c < 1 for c in card) or p.size != int(np.prod(card)):
            raise DomainError(f"{p.size} probabilities do not fit cardinalities {card}")
        if (p < 0).any():
            raise DomainError("negative probability")
        if abs(p.sum() - 1.0) > DEFAULT_TOL.trace:
            raise DomainError(f"probabilities sum to {p.sum()}")
        p.setflags(write=False)
        object.__setattr__(self, "cardinalities", card)
        object.__setattr__(self, "probabilities", p)

    @property
    def table(self) -> np.ndarray:
        return self.probabilities.reshape(self.cardinalities)

    def marginal(self, vars: Sequence[int]) -> np.ndarray:
        """Marginal table over ``vars``, axes in the order given."""
        vars = _validate_selector(vars, len(self.cardinalities))
        others = tuple(i for i in range(len(self.cardinalities)) if i not in vars)
        m = self.table.sum(axis=others)
        kept = sorted(vars)
        return np.transpose(m, [kept.index(v) for v in vars]) if vars else m

    @classmethod
    def random(cls, cardinalities: Sequence[int], rng: np.random.Generator, concentration: float = 1.0):
        n = int(np.prod(cardinalities))
        return cls(tuple(cardinalities), rng.dirichlet(np.full(n, concentration)))


@dataclass(frozen=True, eq=False)
class ProductMeasurement:
    """One POVM per party; ``povms[i][o]`` is the effect for outcome ``o`` of party ``i``."""

    povms: tuple[tuple[HermitianOperator, ...], ...]

    def __post_init__(self):
        povms = tuple(tuple(povm) for povm in self.povms)
        for i, povm in enumerate(povms):
            if not povm:
                raise DomainError(f"party {i} has an empty POVM")
            total = sum(e.entries for e in povm)
            if np.abs(total - np.eye(total.shape[0])).max() > 1e-9:
                raise DomainError(f"effects of party {i} do not sum to the identity")
            for e in povm:
                if e.eigvalsh()[0] < -DEFAULT_TOL.psd:
                    raise DomainError(f"party {i} has a non-positive effect")
        object.__setattr__(self, "povms", povms)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.povms)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p[0].side for p in self.povms)

    @classmethod
    def computational(cls, dims: Sequence[int]) -> "ProductMeasurement":
        povms = []
        for d in dims:
            povms.append(tuple(HermitianOperator((d,), np.diag(np.eye(d)[i])) for i in range(d)))
        return cls(tuple(povms))

    @classmethod
    def from_unitaries(cls, unitaries: Sequence[np.ndarray]) -> "ProductMeasurement":
        """Projective measurements onto the columns of each unitary."""
        povms = []
        for u in unitaries:
            d = u.shape[0]
            povms.append(tuple(HermitianOperator((d,), np.outer(u[:, i], u[:, i].conj())) for i in range(d)))
        return cls(tuple(povms))

    @classmethod
    def random(cls, dims: Sequence[int], rng: np.random.Generator, outcomes: int | None = None):
        """Random POVMs obtained from Haar-random isometries C^d -> C^k (x) C^d."""
        povms = []
        for d in dims:
            k = d if outcomes is None else outcomes
            v = random_unitary(k * d, rng)[:, :d].reshape(k, d, d)
            effects = [v[o].conj().T @ v[o] for o in range(k)]
            povms.append(tuple(HermitianOperator((d,), (e + e.conj().T) / 2) for e in effects))
        return cls(tuple(povms))


def ghz_vector(d: int = 2, k: int = 3) -> np.ndarray:
    psi = np.zeros(d**k, dtype=complex)
    step = sum(d**j for j in range(k))
    psi[np.arange(d) * step] = 1 / np.sqrt(d)
    return psi


def ghz_state(d: int = 2, k: int = 3) -> DensityMatrix:
    if d < 2 or k < 2:
        raise DomainError("GHZ state needs d >= 2 and k >= 2")
    return pure_state(ghz_vector(d, k), (d,) * k)


def w_vector() -> np.ndarray:
    psi = np.zeros(8, dtype=complex)
    psi[[1, 2, 4]] = 1 / np.sqrt(3)
    return psi


def w_state() -> DensityMatrix:
    return pure_state(w_vector(), (2, 2, 2))


def measure(rho: DensityMatrix, meas: ProductMeasurement) -> JointDistribution:
    """Outcome statistics ``P(o_1..o_n) = tr[rho (E_{o_1} x ... x E_{o_n})]``."""
    if meas.dims != rho.dims:
        raise DomainError(f"measurement dims {meas.dims} do not match state dims {rho.dims}")
    n = rho.num_subsystems
    letters = "abcdefghijklmnopqrstuvwxyz"
    row, col, out = letters[:n], letters[n:2 * n], letters[2 * n:3 * n]
    spec = row + col + "," + ",".join(out[i] + col[i] + row[i] for i in range(n)) + "->" + out
    effects = [np.stack([e.entries for e in povm]) for povm in meas.povms]
    p = np.real(np.einsum(spec, rho.entries.reshape(rho.dims * 2), *effects, optimize=True)).ravel()
    p = np.where((p < 0) & (p >= -rho.tol.psd), 0.0, p)
    if (p < 0).any():
        raise DomainError("measurement produced negative probabilities")
    return JointDistribution(meas.cardinalities, p / p.sum())


def shannon_entropy(p: JointDistribution, vars: Sequence[int]) -> float:
    """Entropy in bits of the marginal on ``vars`` (zero for an empty selection)."""
    vars = list(vars)
    if not vars:
        return 0.0
    return _entropy_bits(p.marginal(vars).ravel())


def mutual_information(p: JointDistribution, x: Sequence[int], y: Sequence[int]) -> float:
    x, y = list(x), list(y)
    if set(x) & set(y):
        raise DomainError(f"selectors {x} and {y} overlap")
    return shannon_entropy(p, x) + shannon_entropy(p, y) - shannon_entropy(p, x + y)


def coincidence_probability(p: JointDistribution, x, y) -> float:
    """``P(x = y)`` for two single variables of equal cardinality."""
    x = _single(x)
    y = _single(y)
    if x == y:
        raise DomainError("coincidence needs two distinct variables")
    cx, cy = p.cardinalities[x], p.cardinalities[y]
    if cx != cy:
        raise DomainError(f"cardinalities differ: {cx} vs {cy}")
    return float(np.trace(p.marginal([x, y])))


def _single(v) -> int:
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = list(v)
    if len(v) != 1:
        raise DomainError(f"expected a single variable, got {v}")
    return int(v[0])
