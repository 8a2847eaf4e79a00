"""Dense linear algebra on multi-qudit operators.

Composite indices are row-major with the leftmost subsystem most significant,
i.e. ``|i_0 i_1 ... i_{n-1}>`` maps to ``sum_k i_k * prod(dims[k+1:])``, which
is what ``np.kron`` produces.  Every module in the package relies on this.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-8
    norm: float = 1e-9


DEFAULT_TOL = Tolerances()


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix acting on a tensor product of spaces with local dimensions ``dims``."""

    dims: tuple[int, ...]
    entries: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DomainError(f"dims must be positive integers, got {self.dims}")
        m = _freeze(self.entries)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise DomainError(f"entries have shape {m.shape}, expected {(n, n)} for dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", m)
        self._check()

    def _check(self):
        m = self.entries
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > self.tol.herm * scale:
            raise DomainError("operator is not Hermitian")

    @property
    def side(self) -> int:
        return self.entries.shape[0]

    @property
    def num_subsystems(self) -> int:
        return len(self.dims)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def expectation(self, other: "HermitianOperator | np.ndarray") -> float:
        """Return ``tr[self @ other]`` (real for Hermitian arguments)."""
        o = other.entries if isinstance(other, HermitianOperator) else np.asarray(other)
        return float(np.einsum("ij,ji->", self.entries, o).real)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


class DensityMatrix(HermitianOperator):
    """Trace-one positive semidefinite Hermitian operator."""

    def _check(self):
        super()._check()
        if abs(np.trace(self.entries) - 1.0) > self.tol.trace:
            raise DomainError(f"trace is {np.trace(self.entries).real:.3e}, not 1")
        lam = np.linalg.eigvalsh(self.entries)[0]
        if lam < -self.tol.psd:
            raise DomainError(f"minimum eigenvalue {lam:.3e} is below -{self.tol.psd:g}")


def density_matrix(entries, dims: Sequence[int] | None = None, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Build a :class:`DensityMatrix`, symmetrizing away floating-point asymmetry.

    ``dims`` defaults to qubits when the side is a power of two, else a single system.
    """
    m = np.asarray(entries, dtype=complex)
    if dims is None:
        n = m.shape[0]
        q = int(round(np.log2(n))) if n > 1 else 0
        dims = (2,) * q if q and 2**q == n else (n,)
    return DensityMatrix(tuple(dims), (m + m.conj().T) / 2, tol)


def pure_state(psi, dims: Sequence[int]) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > DEFAULT_TOL.norm:
        raise DomainError(f"state vector has norm {nrm}, expected 1")
    return density_matrix(np.outer(psi, psi.conj()), dims)


def maximally_mixed(dims: Sequence[int]) -> DensityMatrix:
    n = int(np.prod(dims))
    return DensityMatrix(tuple(dims), np.eye(n) / n)


def _validate_selector(indices: Sequence[int], n: int, allow_empty: bool = True) -> list[int]:
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise DomainError(f"duplicate subsystem indices in {list(indices)}")
    if any(i < 0 or i >= n for i in idx):
        raise DomainError(f"subsystem indices {list(indices)} out of range for {n} subsystems")
    if not idx and not allow_empty:
        raise DomainError("empty subsystem selection")
    return idx


def _same_kind(template: HermitianOperator, dims, entries) -> HermitianOperator:
    cls = type(template)
    if cls is DensityMatrix:
        return density_matrix(entries, dims, template.tol)
    return cls(tuple(dims), entries, template.tol)


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product; returns a :class:`DensityMatrix` when both factors are states."""
    dims = a.dims + b.dims
    m = np.kron(a.entries, b.entries)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return density_matrix(m, dims, a.tol)
    return HermitianOperator(dims, (m + m.conj().T) / 2, a.tol)


def tensor_all(ops: Sequence[HermitianOperator]) -> HermitianOperator:
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def partial_trace_array(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced matrix on ``keep`` (original subsystem order) of a raw array."""
    k = len(dims)
    keep = sorted(keep)
    t = np.asarray(m).reshape(tuple(dims) * 2)
    traced = [i for i in range(k) if i not in keep]
    # einsum letters: row indices a.., column indices shared for traced systems
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(k)]
    col = [row[i] if i in traced else letters[k + i] for i in range(k)]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    n = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum("".join(row + col) + "->" + "".join(out), t).reshape(n, n)


def partial_trace(m: HermitianOperator, keep: Sequence[int]) -> HermitianOperator:
    """Trace out every subsystem not listed in ``keep``; kept systems stay in their original order."""
    keep = _validate_selector(keep, m.num_subsystems)
    if not keep:
        raise DomainError("cannot keep zero subsystems")
    dims = tuple(m.dims[i] for i in sorted(keep))
    return _same_kind(m, dims, partial_trace_array(m.entries, m.dims, keep))


def partial_transpose_array(m: np.ndarray, dims: Sequence[int], part: Sequence[int]) -> np.ndarray:
    k = len(dims)
    axes = list(range(2 * k))
    for p in part:
        axes[p], axes[k + p] = axes[k + p], axes[p]
    n = int(np.prod(dims))
    return np.asarray(m).reshape(tuple(dims) * 2).transpose(axes).reshape(n, n)


def partial_transpose(m: HermitianOperator, part: Sequence[int]) -> HermitianOperator:
    """Transpose the tensor factors listed in ``part``."""
    part = _validate_selector(part, m.num_subsystems)
    return HermitianOperator(m.dims, partial_transpose_array(m.entries, m.dims, part), m.tol)


def permute_array(m: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    k = len(dims)
    n = int(np.prod(dims))
    axes = list(perm) + [k + p for p in perm]
    return np.asarray(m).reshape(tuple(dims) * 2).transpose(axes).reshape(n, n)


def permute_subsystems(m: HermitianOperator, perm: Sequence[int]) -> HermitianOperator:
    """Reorder tensor factors: output subsystem ``i`` is input subsystem ``perm[i]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(m.num_subsystems)):
        raise DomainError(f"{perm} is not a permutation of {m.num_subsystems} subsystems")
    dims = tuple(m.dims[p] for p in perm)
    return _same_kind(m, dims, permute_array(m.entries, m.dims, perm))


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 1e-15]
    return float(-(p * np.log2(p)).sum())


def von_neumann_entropy(m: DensityMatrix) -> float:
    """Entropy in bits; eigenvalues in [-eps_psd, 0) are clamped to zero."""
    lam = m.eigvalsh()
    if lam[0] < -m.tol.psd:
        raise DomainError(f"not a state: eigenvalue {lam[0]:.3e}")
    return _entropy_bits(np.clip(lam, 0.0, None))


def fidelity_with_pure(m: HermitianOperator, psi) -> float:
    """``<psi|m|psi>`` clamped to [0, 1]."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != m.side:
        raise DomainError(f"vector of length {psi.size} does not match operator side {m.side}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > m.tol.norm:
        raise DomainError(f"vector norm {nrm} differs from 1")
    f = float(np.vdot(psi, m.entries @ psi).real)
    return min(1.0, max(0.0, f))


def min_eigenvalue(m: HermitianOperator) -> float:
    return float(m.eigvalsh()[0])


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(n_out: int, n_in: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    z = rng.standard_normal((n_out, n_in))
    if not real:
        z = z + 1j * rng.standard_normal((n_out, n_in))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(
    dims: Sequence[int], rng: np.random.Generator, rank: int | None = None, real: bool = False
) -> DensityMatrix:
    """Mixture of ``rank`` Haar-random pure states with Dirichlet weights; full rank by default."""
    n = int(np.prod(dims))
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank))
    if not real:
        g = g + 1j * rng.standard_normal((n, rank))
    g /= np.linalg.norm(g, axis=0)
    w = rng.dirichlet(np.ones(rank))
    return density_matrix((g * w) @ g.conj().T, dims)
