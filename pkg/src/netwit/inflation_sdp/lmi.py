"""Compile a presolved :class:`SdpProblem` into the conic form ``min q.y  s.t.  b - A y in PSD``.

PSD cones use the packed upper triangle, column by column, with off-diagonal
entries scaled by sqrt(2) so that ``svec(X) . svec(Y) = tr(XY)``.  Complex
pieces enter through the real embedding ``[[Re, -Im], [Im, Re]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .problem import AffineParam, SdpProblem

SQRT2 = np.sqrt(2.0)


def svec_positions(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column of each packed entry (upper triangle, column-major)."""
    cols = np.repeat(np.arange(n), np.arange(1, n + 1))
    rows = np.concatenate([np.arange(j + 1) for j in range(n)])
    return rows, cols


def svec(m: np.ndarray) -> np.ndarray:
    r, c = svec_positions(m.shape[0])
    return m[r, c] * np.where(r == c, 1.0, SQRT2)


def smat(v: np.ndarray, n: int) -> np.ndarray:
    r, c = svec_positions(n)
    vals = v * np.where(r == c, 1.0, 1 / SQRT2)
    out = np.zeros((n, n))
    out[r, c] = vals
    out[c, r] = vals
    return out


def _selectors(m: int, real: bool) -> tuple[sp.csr_matrix, sp.csr_matrix, int]:
    """Sparse maps with ``svec(realify(P)) = S_re @ Re(vec P) + S_im @ Im(vec P)``."""
    n = m if real else 2 * m
    r, c = svec_positions(n)
    scale = np.where(r == c, 1.0, SQRT2)
    k = np.arange(len(r))
    if real:
        s_re = sp.csr_matrix((scale, (k, r * m + c)), shape=(len(r), m * m))
        return s_re, sp.csr_matrix((len(r), m * m)), n
    top, left = r < m, c < m
    diag_blk = top == left  # (0,0) or (1,1) block: real part
    rr, cc = r % m, c % m
    s_re = sp.csr_matrix((scale[diag_blk], (k[diag_blk], rr[diag_blk] * m + cc[diag_blk])), shape=(len(r), m * m))
    off = ~diag_blk  # upper-right block holds -Im
    s_im = sp.csr_matrix((-scale[off], (k[off], rr[off] * m + cc[off])), shape=(len(r), m * m))
    return s_re, s_im, n


@dataclass
class ConeSlot:
    block: str
    isometry: np.ndarray
    real: bool
    size: int  # side of the PSD cone handed to the solver
    start: int
    stop: int


@dataclass
class CompiledLmi:
    q: np.ndarray
    q0: float
    A: sp.csc_matrix
    b: np.ndarray
    slots: list[ConeSlot]
    param: AffineParam
    slack: bool
    sign: float  # +1 when the original problem is a minimization, -1 for maximization
    imag_residual: float

    @property
    def cone_sizes(self) -> list[int]:
        return [s.size for s in self.slots]

    def coords(self, y: np.ndarray) -> np.ndarray:
        n = self.param.num_free
        return self.param(y[:n])

    def slot_matrix(self, slot: ConeSlot, z: np.ndarray) -> np.ndarray:
        """Hermitian ``H`` with ``z_slot . s_slot = tr(H P)`` where ``P`` is the unembedded piece."""
        zm = smat(z[slot.start:slot.stop], slot.size)
        if slot.real:
            return zm.astype(complex)
        m = slot.size // 2
        z11, z12, z21, z22 = zm[:m, :m], zm[:m, m:], zm[m:, :m], zm[m:, m:]
        re = (z11 + z22 + (z11 + z22).T) / 2
        k = z12 - z21
        return re - 1j * (k - k.T) / 2

    def block_dual(self, name: str, z: np.ndarray) -> np.ndarray:
        """Sum over the block's pieces of ``V H V^dagger``: ``z . s = tr(H_block X_block)`` for that block."""
        out = None
        for slot in self.slots:
            if slot.block != name:
                continue
            v = slot.isometry
            h = v @ self.slot_matrix(slot, z) @ v.conj().T
            out = h if out is None else out + h
        if out is None:
            raise KeyError(name)
        return out


def compile_lmi(problem: SdpProblem, param: AffineParam, feasibility: bool = False,
                skip_blocks: tuple[str, ...] = ()) -> CompiledLmi:
    """Stack every block piece into PSD cone rows.

    With ``feasibility=True`` a slack column ``t`` is appended, every piece
    becomes ``P + t I`` and the objective is ``min t``.
    """
    d = param.D.tocsr()
    nfree = param.num_free
    a_parts, b_parts, slots = [], [], []
    row = 0
    imag_res = 0.0
    for blk in problem.blocks.values():
        if blk.name in skip_blocks:
            continue
        d_b = d[blk.offset:blk.offset + blk.size]
        e_b = param.e[blk.offset:blk.offset + blk.size]
        expn = blk.basis.expansion
        for piece in blk.cone_pieces():
            v = np.asarray(piece.isometry)
            m = v.shape[1]
            # row-major vec(V^dag X V) = kron(V^dag, V^T) vec(X)
            kr = sp.kron(sp.csr_matrix(v.conj().T), sp.csr_matrix(v.T), format="csr")
            lin = (kr @ expn).tocsr()
            s_re, s_im, n = _selectors(m, piece.real)
            s_mat = (s_re @ lin.real + s_im @ lin.imag).tocsr()
            if piece.real:
                # the discarded imaginary part must vanish on the constrained subspace
                chk = s_re @ lin.imag
                resid = chk @ d_b
                imag_res = max(imag_res, float(abs(resid).max()) if resid.nnz else 0.0,
                               float(np.abs(chk @ e_b).max(initial=0.0)))
            a_blk = -(s_mat @ d_b)
            if feasibility:
                a_blk = sp.hstack([a_blk, sp.csr_matrix(-svec(np.eye(n))).T])
            a_parts.append(a_blk.tocsr())
            b_parts.append(s_mat @ e_b)
            ln = n * (n + 1) // 2
            slots.append(ConeSlot(blk.name, v, piece.real, n, row, row + ln))
            row += ln
    a_all = sp.vstack(a_parts).tocsc()
    a_all.data[np.abs(a_all.data) < 1e-14] = 0.0
    a_all.eliminate_zeros()
    b_all = np.concatenate(b_parts)
    b_all[np.abs(b_all) < 1e-15] = 0.0
    if feasibility:
        q = np.zeros(nfree + 1)
        q[-1] = 1.0
        return CompiledLmi(q, 0.0, a_all, b_all, slots, param, True, 1.0, imag_res)
    if problem.objective is None:
        raise ValueError("problem has no objective; compile with feasibility=True")
    sign = 1.0 if problem.sense == "minimize" else -1.0
    c = problem.objective
    q = sign * (d.T @ c)
    q0 = sign * (float(c @ param.e) + problem.objective_offset)
    return CompiledLmi(np.asarray(q).ravel(), q0, a_all, b_all, slots, param, False, sign, imag_res)
