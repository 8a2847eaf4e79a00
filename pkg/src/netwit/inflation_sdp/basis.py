"""Product operator bases for Hermitian matrices on tensor-product spaces.

A block with local dimensions ``dims`` is parametrized by real coordinates
``c_s = tr(P_s X)`` where ``P_s`` runs over tensor products of a local
Hermitian basis whose first element is the identity.  In these coordinates a
partial trace keeps exactly the strings that are the identity on the traced
sites, a subsystem permutation permutes string letters and a partial
transpose flips the sign of letters that are antisymmetric.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
import scipy.sparse as sp


@lru_cache(maxsize=None)
def local_basis(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Generalized Gell-Mann basis normalized to ``tr(B_a B_b) = d delta_ab``.

    Returns the stacked matrices ``(d*d, d, d)`` and a boolean mask of the
    antisymmetric (purely imaginary) elements.  For ``d = 2`` this is I, X, Y, Z.
    """
    mats = [np.eye(d, dtype=complex)]
    anti = [False]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
            anti.append(False)
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
            anti.append(True)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1
        m[l, l] = -l
        mats.append(m)
        anti.append(False)
    out = np.stack([m * np.sqrt(d / np.trace(m @ m).real) for m in mats])
    out.setflags(write=False)
    mask = np.array(anti)
    mask.setflags(write=False)
    return out, mask


class ProductBasis:
    """Coordinate system of one block; ``real=True`` keeps only strings with an even number of antisymmetric letters."""

    def __init__(self, dims: Sequence[int], real: bool):
        self.dims = tuple(int(d) for d in dims)
        self.real = bool(real)
        self.side = int(np.prod(self.dims))
        radix = [d * d for d in self.dims]
        allstr = np.array(list(product(*[range(r) for r in radix])), dtype=np.int64).reshape(-1, len(radix))
        self._radix = np.array(radix)
        self._weights = np.array([int(np.prod(radix[i + 1:])) for i in range(len(radix))], dtype=np.int64)
        anti = self.antisym_count(allstr)
        keep = (anti % 2 == 0) if self.real else np.ones(len(allstr), bool)
        self.strings = allstr[keep]
        self._index = np.full(len(allstr), -1, dtype=np.int64)
        self._index[np.flatnonzero(keep)] = np.arange(keep.sum())

    def __len__(self) -> int:
        return len(self.strings)

    def antisym_count(self, strings: np.ndarray, sites: Sequence[int] | None = None) -> np.ndarray:
        strings = np.atleast_2d(strings)
        sites = range(len(self.dims)) if sites is None else sites
        total = np.zeros(len(strings), dtype=np.int64)
        for i in sites:
            total += local_basis(self.dims[i])[1][strings[:, i]]
        return total

    def index(self, strings: np.ndarray) -> np.ndarray:
        """Coordinate indices of ``strings`` (-1 where a string is not part of a real basis)."""
        codes = np.atleast_2d(strings) @ self._weights
        return self._index[codes]

    def identity_index(self) -> int:
        return int(self.index(np.zeros((1, len(self.dims)), dtype=np.int64))[0])

    @property
    def expansion(self) -> sp.csr_matrix:
        """Sparse ``(side**2, len(self))`` complex matrix with columns ``vec(P_s) / side`` (row-major vec)."""
        if not hasattr(self, "_expansion"):
            self._expansion = self._build_expansion()
        return self._expansion

    def _build_expansion(self) -> sp.csr_matrix:
        k = len(self.dims)
        # kron over sites of (basis index) x (row, col) gives columns ordered (r1 c1 r2 c2 ...)
        full = None
        for d in self.dims:
            mats, _ = local_basis(d)
            loc = sp.csr_matrix(mats.reshape(d * d, d * d))
            full = loc if full is None else sp.kron(full, loc, format="csr")
        full = full[np.flatnonzero(self._index >= 0)] if self.real else full
        # reorder columns to row-major (r1..rk, c1..ck)
        grid = np.arange(self.side**2).reshape([v for d in self.dims for v in (d, d)])
        perm = grid.transpose(list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))).ravel()
        out = full.T.tocsr()[perm]  # row-major position r reads kron position perm[r]
        return (out / self.side).tocsr()

    def coords(self, matrix: np.ndarray) -> np.ndarray:
        """``c_s = tr(P_s X)`` for a Hermitian matrix."""
        x = np.asarray(matrix, dtype=complex)
        # tr(P X) = vec(P) . vec(X^T); expansion holds vec(P)/side
        return np.real(self.expansion.T @ x.T.ravel()) * self.side

    def functional(self, op: np.ndarray) -> np.ndarray:
        """Weights ``w`` with ``tr(op X) = w . c`` for every block matrix ``X``."""
        t = np.asarray(op, dtype=complex)
        return np.real(self.expansion.T @ t.T.ravel())

    def matrix(self, coords: np.ndarray) -> np.ndarray:
        v = self.expansion @ np.asarray(coords, dtype=float)
        m = np.asarray(v).reshape(self.side, self.side)
        return (m + m.conj().T) / 2


def embed_strings(local: np.ndarray, sites: Sequence[int], nsites: int) -> np.ndarray:
    """Place the letters of ``local`` (rows of strings) on ``sites`` of a longer string, identity elsewhere."""
    local = np.atleast_2d(local)
    out = np.zeros((len(local), nsites), dtype=np.int64)
    out[:, list(sites)] = local
    return out
