"""Conic solver backends and the generic solve entry point."""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lmi import CompiledLmi, compile_lmi, svec_positions
from .problem import InfeasibleConstraints, SdpProblem, presolve

log = logging.getLogger(__name__)

OPTIMAL, NEAR_OPTIMAL, INFEASIBLE, NUMERICAL_ERROR = "optimal", "near_optimal", "infeasible", "numerical_error"
FEAS_SLACK_TOL = 1e-6


class SolverUnavailable(RuntimeError):
    """The requested backend cannot be used in this environment."""


class UnsupportedBackend(RuntimeError):
    """The backend did not provide information required by an operation."""


@dataclass
class RawResult:
    y: np.ndarray | None
    z: np.ndarray | None
    status: str
    primal_value: float | None
    dual_value: float | None
    stats: dict


class SolverBackend:
    """Solves ``min q.y  s.t.  b - A y in PSD cones`` (packed upper-triangular ordering)."""

    name = "abstract"
    provides_dual = True

    def solve_lmi(self, lmi: CompiledLmi) -> RawResult:
        raise NotImplementedError


class ClarabelBackend(SolverBackend):
    name = "clarabel"

    def __init__(self, verbose: bool = False, max_iter: int = 200, tol: float = 1e-8):
        try:
            import clarabel  # noqa: F401
        except ImportError as exc:
            raise SolverUnavailable("clarabel is not installed") from exc
        self.verbose = verbose
        self.max_iter = max_iter
        self.tol = tol

    _STATUS = {
        "Solved": OPTIMAL,
        "AlmostSolved": NEAR_OPTIMAL,
        "PrimalInfeasible": INFEASIBLE,
        "AlmostPrimalInfeasible": INFEASIBLE,
    }

    def solve_lmi(self, lmi: CompiledLmi) -> RawResult:
        import clarabel

        n = lmi.A.shape[1]
        st = clarabel.DefaultSettings()
        st.verbose = self.verbose
        st.max_iter = self.max_iter
        st.tol_gap_abs = st.tol_gap_rel = st.tol_feas = self.tol
        cones = [clarabel.PSDTriangleConeT(s) for s in lmi.cone_sizes]
        t0 = time.perf_counter()
        sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), lmi.q, lmi.A, lmi.b, cones, st).solve()
        status = self._STATUS.get(str(sol.status).split(".")[-1], NUMERICAL_ERROR)
        stats = {
            "backend": self.name,
            "raw_status": str(sol.status),
            "iterations": int(sol.iterations),
            "primal_residual": float(sol.r_prim),
            "dual_residual": float(sol.r_dual),
            "solve_time": time.perf_counter() - t0,
        }
        if status in (OPTIMAL, NEAR_OPTIMAL):
            return RawResult(np.array(sol.x), np.array(sol.z), status, float(sol.obj_val), float(sol.obj_val_dual), stats)
        return RawResult(None, None, status, None, None, stats)


class ScsBackend(SolverBackend):
    """SCS packs the lower triangle column-major, i.e. the upper triangle row by row."""

    name = "scs"

    def __init__(self, verbose: bool = False, eps: float = 1e-8, max_iters: int = 200_000):
        try:
            import scs  # noqa: F401
        except ImportError as exc:
            raise SolverUnavailable("scs is not installed") from exc
        self.verbose = verbose
        self.eps = eps
        self.max_iters = max_iters

    @staticmethod
    def _order(sizes: list[int]) -> np.ndarray:
        """Permutation taking our packed ordering to SCS's, cone by cone."""
        perm, start = [], 0
        for n in sizes:
            r, c = svec_positions(n)
            pos = {(i, j): k for k, (i, j) in enumerate(zip(r, c))}
            perm.extend(start + pos[(i, j)] for i in range(n) for j in range(i, n))
            start += len(r)
        return np.array(perm, dtype=np.int64)

    def solve_lmi(self, lmi: CompiledLmi) -> RawResult:
        import scs

        perm = self._order(lmi.cone_sizes)
        data = {"A": lmi.A.tocsr()[perm].tocsc(), "b": lmi.b[perm], "c": lmi.q}
        t0 = time.perf_counter()
        solver = scs.SCS(data, {"s": lmi.cone_sizes}, verbose=self.verbose, eps_abs=self.eps,
                         eps_rel=self.eps, max_iters=self.max_iters)
        sol = solver.solve()
        info = sol["info"]
        raw = info["status"]
        if raw == "solved":
            status = OPTIMAL
        elif raw == "solved_inaccurate":
            status = NEAR_OPTIMAL
        elif raw.startswith("infeasible"):
            status = INFEASIBLE
        else:
            status = NUMERICAL_ERROR
        stats = {
            "backend": self.name,
            "raw_status": raw,
            "iterations": int(info["iter"]),
            "primal_residual": float(info["res_pri"]),
            "dual_residual": float(info["res_dual"]),
            "solve_time": time.perf_counter() - t0,
        }
        if status in (OPTIMAL, NEAR_OPTIMAL):
            z = np.empty_like(sol["y"])
            z[perm] = sol["y"]
            return RawResult(np.array(sol["x"]), z, status, float(info["pobj"]), float(info["dobj"]), stats)
        return RawResult(None, None, status, None, None, stats)


_BACKENDS = {"clarabel": ClarabelBackend, "scs": ScsBackend}


def get_backend(name: str | None = None) -> SolverBackend:
    """Backend by name; defaults to ``$NETWIT_SOLVER`` or clarabel."""
    name = (name or os.environ.get("NETWIT_SOLVER") or "clarabel").lower()
    if name not in _BACKENDS:
        raise SolverUnavailable(f"unknown solver {name!r}; choose from {sorted(_BACKENDS)}")
    return _BACKENDS[name]()


@dataclass
class SdpSolution:
    status: str
    objective: float | None
    x: np.ndarray | None
    lmi: CompiledLmi | None = field(default=None, repr=False)
    z: np.ndarray | None = field(default=None, repr=False)
    dual_bound: float | None = None
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, NEAR_OPTIMAL)


def solve_sdp(problem: SdpProblem, backend: SolverBackend | None = None) -> SdpSolution:
    """Presolve, compile and solve.  Feasibility problems (no objective) minimize a PSD slack.

    For feasibility problems the returned ``objective`` is the optimal slack and
    the status is ``infeasible`` when it exceeds ``FEAS_SLACK_TOL``.
    """
    backend = backend or get_backend()
    feasibility = problem.objective is None
    t0 = time.perf_counter()
    try:
        param = presolve(problem)
    except InfeasibleConstraints as exc:
        return SdpSolution(INFEASIBLE, None, None, stats={"reason": f"inconsistent equalities ({exc})"})
    lmi = compile_lmi(problem, param, feasibility=feasibility)
    stats = {"free_variables": param.num_free, "cones": lmi.cone_sizes,
             "compile_time": time.perf_counter() - t0, "real_piece_imag_residual": lmi.imag_residual}
    raw = backend.solve_lmi(lmi)
    stats.update(raw.stats)
    if raw.y is None:
        return SdpSolution(raw.status, None, None, lmi, None, stats=stats)
    x = lmi.coords(raw.y)
    residuals = problem.residuals(x)
    stats["max_equality_residual"] = max(residuals.values(), default=0.0)
    if feasibility:
        slack = float(raw.y[-1])
        stats["slack"] = slack
        status = INFEASIBLE if slack > FEAS_SLACK_TOL else raw.status
        return SdpSolution(status, slack, x, lmi, raw.z, stats=stats)
    value = lmi.sign * (raw.primal_value + lmi.q0)
    dual = lmi.sign * (raw.dual_value + lmi.q0) if raw.dual_value is not None else None
    return SdpSolution(raw.status, value, x, lmi, raw.z, dual, stats)
