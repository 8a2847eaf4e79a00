"""Solver-agnostic semidefinite programs over product-basis coordinates.

Each PSD block is a Hermitian (or real symmetric) matrix parametrized by its
product-basis coordinates.  Constraints are real linear equalities between
coordinates.  Before solving, :func:`presolve` eliminates the equalities so
that every block becomes an affine matrix function of free variables, which
is the linear-matrix-inequality form the conic backends consume.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .basis import ProductBasis


class InfeasibleConstraints(Exception):
    """The equality constraints are inconsistent."""


@dataclass
class Piece:
    """``V^dagger X V`` must be PSD; ``real`` marks pieces known to be real symmetric."""

    isometry: np.ndarray
    real: bool


@dataclass
class PsdBlock:
    name: str
    dims: tuple[int, ...]
    real: bool
    offset: int
    basis: ProductBasis = field(repr=False)
    pieces: list[Piece] | None = None

    @property
    def side(self) -> int:
        return self.basis.side

    @property
    def size(self) -> int:
        return len(self.basis)

    def cone_pieces(self) -> list[Piece]:
        if self.pieces is not None:
            return self.pieces
        return [Piece(np.eye(self.side), self.real)]


@dataclass
class EqConstraint:
    """A group of scalar equalities ``A x = b`` over the global coordinate vector (COO storage)."""

    name: str
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray

    @property
    def count(self) -> int:
        return len(self.rhs)


class SdpProblem:
    """PSD blocks, linear equalities and a linear objective (``None`` for feasibility)."""

    def __init__(self, name: str = "sdp"):
        self.name = name
        self.blocks: dict[str, PsdBlock] = {}
        self.constraints: list[EqConstraint] = []
        self.objective: np.ndarray | None = None
        self.objective_offset = 0.0
        self.sense = "maximize"
        self.metadata: dict = {}
        self._size = 0

    # -- construction -------------------------------------------------------
    def add_block(self, name: str, dims: Sequence[int], real: bool) -> PsdBlock:
        if name in self.blocks:
            raise ValueError(f"block {name!r} already declared")
        basis = ProductBasis(dims, real)
        blk = PsdBlock(name, tuple(dims), real, self._size, basis)
        self.blocks[name] = blk
        self._size += blk.size
        return blk

    @property
    def num_coords(self) -> int:
        return self._size

    def add_constraint(self, name: str, terms: Sequence[tuple[str, np.ndarray, np.ndarray]], rhs) -> EqConstraint:
        """Add rows ``sum_terms coef * x[block][idx] = rhs``.

        ``terms`` holds ``(block, idx, coef)`` with ``idx`` and ``coef`` of shape
        ``(m,)`` -- one entry per row -- and ``rhs`` of shape ``(m,)``.  Rows in which
        an index is ``-1`` (a coordinate absent from a real basis) drop that term.
        """
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        m = len(rhs)
        rows, cols, vals = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)], [np.zeros(0)]
        for bname, idx, coef in terms:
            if bname not in self.blocks:
                raise KeyError(f"constraint {name!r} references undeclared block {bname!r}")
            blk = self.blocks[bname]
            idx = np.broadcast_to(np.asarray(idx, dtype=np.int64), (m,))
            coef = np.broadcast_to(np.asarray(coef, dtype=float), (m,))
            ok = idx >= 0
            rows.append(np.flatnonzero(ok))
            cols.append(idx[ok] + blk.offset)
            vals.append(coef[ok])
        con = EqConstraint(name, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), rhs)
        self.constraints.append(con)
        return con

    def set_objective(self, weights: dict[str, np.ndarray], sense: str = "maximize", offset: float = 0.0):
        c = np.zeros(self.num_coords)
        for bname, w in weights.items():
            blk = self.blocks[bname]
            c[blk.offset:blk.offset + blk.size] += w
        self.objective = c
        self.objective_offset = float(offset)
        if sense not in ("maximize", "minimize"):
            raise ValueError(sense)
        self.sense = sense

    # -- access -------------------------------------------------------------
    def block_coords(self, name: str, x: np.ndarray) -> np.ndarray:
        blk = self.blocks[name]
        return x[blk.offset:blk.offset + blk.size]

    def block_matrix(self, name: str, x: np.ndarray) -> np.ndarray:
        return self.blocks[name].basis.matrix(self.block_coords(name, x))

    def equality_matrix(self) -> tuple[sp.csr_matrix, np.ndarray]:
        rows, cols, vals, rhs = [], [], [], []
        r0 = 0
        for c in self.constraints:
            rows.append(c.rows + r0)
            cols.append(c.cols)
            vals.append(c.vals)
            rhs.append(c.rhs)
            r0 += c.count
        if not rows:
            return sp.csr_matrix((0, self.num_coords)), np.zeros(0)
        a = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r0, self.num_coords))
        return a, np.concatenate(rhs)

    def residuals(self, x: np.ndarray) -> dict[str, float]:
        """Max absolute violation of each named constraint group at coordinates ``x``."""
        out = {}
        for c in self.constraints:
            lhs = np.zeros(c.count)
            np.add.at(lhs, c.rows, c.vals * x[c.cols])
            out[c.name] = float(np.abs(lhs - c.rhs).max(initial=0.0))
        return out

    # -- export -------------------------------------------------------------
    def to_dict(self) -> dict:
        """Self-describing conic form: blocks, equality triplets ``(row, col, value)``, ``b`` and ``c``."""
        a, b = self.equality_matrix()
        a = a.tocoo()
        blocks = []
        for blk in self.blocks.values():
            blocks.append({
                "name": blk.name,
                "dims": list(blk.dims),
                "field": "real" if blk.real else "complex",
                "offset": blk.offset,
                "size": blk.size,
                "strings": blk.basis.strings.tolist(),
            })
        return {
            "format": "netwit-conic-1",
            "name": self.name,
            "coordinates": "c_s = tr(P_s X), P_s tensor products of the generalized Gell-Mann basis "
                           "(identity first, tr(B_a B_b) = d delta_ab); X = sum_s c_s P_s / side",
            "sense": self.sense if self.objective is not None else "feasibility",
            "blocks": blocks,
            "constraint_groups": [{"name": c.name, "rows": c.count} for c in self.constraints],
            "A": [[int(i), int(j), float(v)] for i, j, v in zip(a.row, a.col, a.data)],
            "b": b.tolist(),
            "c": None if self.objective is None else self.objective.tolist(),
            "c_offset": self.objective_offset,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SdpProblem":
        prob = cls(data.get("name", "sdp"))
        for b in data["blocks"]:
            blk = prob.add_block(b["name"], b["dims"], b["field"] == "real")
            if blk.offset != b["offset"] or blk.size != b["size"]:
                raise ValueError(f"block {b['name']!r} layout mismatch")
        trip = np.asarray(data["A"], dtype=float).reshape(-1, 3)
        rhs = np.asarray(data["b"], dtype=float)
        r0 = 0
        for g in data["constraint_groups"]:
            sel = (trip[:, 0] >= r0) & (trip[:, 0] < r0 + g["rows"])
            t = trip[sel]
            prob.constraints.append(EqConstraint(
                g["name"], t[:, 0].astype(np.int64) - r0, t[:, 1].astype(np.int64), t[:, 2], rhs[r0:r0 + g["rows"]]))
            r0 += g["rows"]
        if data.get("c") is not None:
            prob.objective = np.asarray(data["c"], dtype=float)
            prob.objective_offset = float(data.get("c_offset", 0.0))
            prob.sense = data["sense"]
        prob.metadata = dict(data.get("metadata", {}))
        return prob

    def dump(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


@dataclass
class AffineParam:
    """Coordinates as an affine function of free variables: ``x = D y + e``."""

    D: sp.csr_matrix
    e: np.ndarray

    @property
    def num_free(self) -> int:
        return self.D.shape[1]

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self.D @ y + self.e


def presolve(problem: SdpProblem, tol: float = 1e-9) -> AffineParam:
    """Eliminate every equality constraint by sparse Gauss-Jordan substitution.

    Raises :class:`InfeasibleConstraints` when a row reduces to ``0 = b`` with ``b != 0``.
    """
    a, b = problem.equality_matrix()
    a = a.tocsr()
    # defs[p] = (coef dict over free vars, const): x_p = sum coef * x_v + const
    defs: dict[int, tuple[dict[int, float], float]] = {}
    users: dict[int, set[int]] = {}
    for r in range(a.shape[0]):
        lo, hi = a.indptr[r], a.indptr[r + 1]
        expr: dict[int, float] = {}
        const = 0.0
        for j, v in zip(a.indices[lo:hi], a.data[lo:hi]):
            if j in defs:
                dcoef, dconst = defs[j]
                const += v * dconst
                for k, w in dcoef.items():
                    expr[k] = expr.get(k, 0.0) + v * w
            else:
                expr[j] = expr.get(j, 0.0) + v
        expr = {k: v for k, v in expr.items() if abs(v) > 1e-12}
        target = b[r] - const
        if not expr:
            if abs(target) > tol * max(1.0, abs(b[r])):
                raise InfeasibleConstraints(f"row {r}: 0 = {target:.3e}")
            continue
        # pivot on the largest coefficient; ties go to the later coordinate (auxiliary blocks come last)
        piv = max(expr, key=lambda k: (abs(expr[k]), k))
        pc = expr.pop(piv)
        new = ({k: -v / pc for k, v in expr.items()}, target / pc)
        # substitute the new pivot into definitions that use it
        for u in users.pop(piv, ()):
            ucoef, uconst = defs[u]
            w = ucoef.pop(piv)
            uconst += w * new[1]
            for k, v in new[0].items():
                nv = ucoef.get(k, 0.0) + w * v
                if abs(nv) > 1e-12:
                    ucoef[k] = nv
                    users.setdefault(k, set()).add(u)
                else:
                    ucoef.pop(k, None)
                    users.get(k, set()).discard(u)
            defs[u] = (ucoef, uconst)
        defs[piv] = new
        for k in new[0]:
            users.setdefault(k, set()).add(piv)

    n = problem.num_coords
    free = [j for j in range(n) if j not in defs]
    col = {j: i for i, j in enumerate(free)}
    rows, cols, vals = list(free), [col[j] for j in free], [1.0] * len(free)
    e = np.zeros(n)
    for p, (coef, const) in defs.items():
        e[p] = const
        for k, v in coef.items():
            rows.append(p)
            cols.append(col[k])
            vals.append(v)
    d = sp.csr_matrix((vals, (rows, cols)), shape=(n, len(free)))
    return AffineParam(d, e)
