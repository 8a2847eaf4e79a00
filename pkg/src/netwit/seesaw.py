"""Explicit network-2 states on the triangle and see-saw lower bounds.

Three bipartite sources feed three parties: ``sigma_{A'B''}``, ``sigma_{B'C''}``
and ``sigma_{C'A''}``.  Each party applies a channel from its two hidden
systems ``(X', X'')`` to one qubit, and a classical branch variable shared by
everyone selects which sources and channels are used.

Channels are stored as Choi matrices ``J`` indexed ``(input, output)`` with
``Omega(|i><j|) = J[i, :, j, :]``; trace preservation reads ``tr_out J = I``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .io import complex_to_pairs, pairs_to_complex
from .qlinalg import DensityMatrix, DomainError, density_matrix, permute_array, random_isometry, random_state

log = logging.getLogger(__name__)

CPTP_TOL = 1e-8
# hidden systems in source order (A', B'', B', C'', C', A'') -> party order (A', A'', B', B'', C', C'')
SOURCE_TO_PARTY = (0, 5, 2, 1, 4, 3)
PARTY_TO_SOURCE = (0, 3, 2, 5, 4, 1)
# (first, second) hidden-system index, in party order, held by each source
SOURCE_SLOTS = ((0, 3), (2, 5), (4, 1))


class SeesawFailure(RuntimeError):
    """Every restart failed."""


@dataclass(frozen=True)
class SeesawConfig:
    hidden_dim: int = 2
    branches: int = 4
    restarts: int = 20
    max_iters: int = 200
    improvement_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_dim", "branches", "restarts", "max_iters"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if not self.improvement_tol > 0:
            raise DomainError("improvement_tol must be positive")


def _check_choi(j: np.ndarray, d_in: int, d_out: int = 2) -> None:
    if j.shape != (d_in * d_out, d_in * d_out):
        raise DomainError(f"Choi matrix has shape {j.shape}, expected {(d_in * d_out,) * 2}")
    if np.abs(j - j.conj().T).max() > CPTP_TOL:
        raise DomainError("Choi matrix is not Hermitian")
    if np.linalg.eigvalsh(j)[0] < -CPTP_TOL:
        raise DomainError("Choi matrix is not positive semidefinite")
    red = np.einsum("iaja->ij", j.reshape(d_in, d_out, d_in, d_out))
    if np.abs(red - np.eye(d_in)).max() > CPTP_TOL:
        raise DomainError("channel is not trace preserving")


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """``hidden_dims`` in party order (A', A'', B', B'', C', C''); per-branch sources and Choi matrices."""

    hidden_dims: tuple[int, ...]
    sources: tuple[tuple[DensityMatrix, DensityMatrix, DensityMatrix], ...]
    maps: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]
    weights: np.ndarray

    def __post_init__(self):
        h = tuple(int(d) for d in self.hidden_dims)
        if len(h) != 6 or min(h) < 1:
            raise DomainError(f"need six positive hidden dimensions, got {self.hidden_dims}")
        w = np.asarray(self.weights, dtype=float)
        if len(self.sources) != len(w) or len(self.maps) != len(w):
            raise DomainError("sources, maps and weights disagree on the number of branches")
        if (w < 0).any() or abs(w.sum() - 1) > 1e-9:
            raise DomainError("weights must be a probability vector")
        for srcs in self.sources:
            for s, (i, k) in zip(srcs, SOURCE_SLOTS):
                if not isinstance(s, DensityMatrix) or s.dims != (h[i], h[k]):
                    raise DomainError(f"source must be a DensityMatrix with dims {(h[i], h[k])}")
        maps = []
        for branch in self.maps:
            js = tuple(np.asarray(j, dtype=complex) for j in branch)
            for p, j in enumerate(js):
                _check_choi(j, h[2 * p] * h[2 * p + 1])
            maps.append(js)
        object.__setattr__(self, "hidden_dims", h)
        object.__setattr__(self, "maps", tuple(maps))
        object.__setattr__(self, "weights", w)

    @property
    def branches(self) -> int:
        return len(self.weights)

    @property
    def party_dims(self) -> tuple[int, int, int]:
        h = self.hidden_dims
        return h[0] * h[1], h[2] * h[3], h[4] * h[5]

    def to_dict(self) -> dict:
        return {
            "hidden_dims": list(self.hidden_dims),
            "weights": self.weights.tolist(),
            "branches": [
                {
                    "sources": [complex_to_pairs(s.entries) for s in srcs],
                    "choi": [complex_to_pairs(j) for j in maps],
                }
                for srcs, maps in zip(self.sources, self.maps)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkModel":
        h = tuple(data["hidden_dims"])
        sources, maps = [], []
        for br in data["branches"]:
            srcs = []
            for raw, (i, k) in zip(br["sources"], SOURCE_SLOTS):
                n = h[i] * h[k]
                srcs.append(density_matrix(pairs_to_complex(raw, (n, n)), (h[i], h[k])))
            sources.append(tuple(srcs))
            js = []
            for p, raw in enumerate(br["choi"]):
                n = 2 * h[2 * p] * h[2 * p + 1]
                js.append(pairs_to_complex(raw, (n, n)))
            maps.append(tuple(js))
        return cls(h, tuple(sources), tuple(maps), np.asarray(data["weights"], dtype=float))


# -- contractions -------------------------------------------------------------

def _party_sources(h: Sequence[int], srcs: Sequence[np.ndarray]) -> np.ndarray:
    """Product of the three sources as a matrix over the party-ordered hidden systems."""
    prod = np.kron(np.kron(srcs[0], srcs[1]), srcs[2])
    src_dims = [h[i] for pair in SOURCE_SLOTS for i in pair]
    return permute_array(prod, src_dims, SOURCE_TO_PARTY)


def _choi_tensor(j: np.ndarray, d_in: int) -> np.ndarray:
    return j.reshape(d_in, 2, d_in, 2)


def branch_state(h: Sequence[int], srcs: Sequence[np.ndarray], maps: Sequence[np.ndarray]) -> np.ndarray:
    """Output of one branch: ``(Omega_A x Omega_B x Omega_C)(sigma)``, an 8x8 matrix."""
    da, db, dc = h[0] * h[1], h[2] * h[3], h[4] * h[5]
    sig = _party_sources(h, srcs).reshape(da, db, dc, da, db, dc)
    ja, jb, jc = (_choi_tensor(j, d) for j, d in zip(maps, (da, db, dc)))
    out = np.einsum("ijkIJK,iaIA,jbJB,kcKC->abcABC", sig, ja, jb, jc, optimize=True)
    return out.reshape(8, 8)


def assemble_state(m: NetworkModel) -> DensityMatrix:
    """Mix the branch outputs with the shared-randomness weights."""
    rho = np.zeros((8, 8), dtype=complex)
    for w, srcs, maps in zip(m.weights, m.sources, m.maps):
        if w == 0:
            continue
        rho += w * branch_state(m.hidden_dims, [s.entries for s in srcs], maps)
    return density_matrix(rho, (2, 2, 2))


def _fidelity(t: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.vdot(t, rho @ t)))


def _source_operator(h, srcs, maps, tmat: np.ndarray, which: int) -> np.ndarray:
    """``K`` with ``tr(T rho) = tr(K sigma_which)`` when everything else is held fixed."""
    da, db, dc = h[0] * h[1], h[2] * h[3], h[4] * h[5]
    ja, jb, jc = (_choi_tensor(j, d) for j, d in zip(maps, (da, db, dc)))
    t6 = tmat.reshape(2, 2, 2, 2, 2, 2)
    # G[IJK, ijk] with tr(T rho) = tr(G sigma) in party order
    g = np.einsum("ABCabc,iaIA,jbJB,kcKC->IJKijk", t6, ja, jb, jc, optimize=True)
    n = da * db * dc
    g = permute_array(g.reshape(n, n), h, PARTY_TO_SOURCE)
    sd = [h[i] * h[k] for i, k in SOURCE_SLOTS]
    g = g.reshape(sd + sd)
    others = [s for k, s in enumerate(srcs) if k != which]
    spec = {0: "XYZxyz,yY,zZ->Xx", 1: "XYZxyz,xX,zZ->Yy", 2: "XYZxyz,xX,yY->Zz"}[which]
    k = np.einsum(spec, g, *others, optimize=True)
    return (k + k.conj().T) / 2


def _channel_operator(h, srcs, maps, tmat: np.ndarray, which: int) -> np.ndarray:
    """``M`` with ``tr(T rho) = tr(J_which M)`` when everything else is held fixed."""
    dims = (h[0] * h[1], h[2] * h[3], h[4] * h[5])
    sig = _party_sources(h, srcs).reshape(dims + dims)
    js = [_choi_tensor(j, d) for j, d in zip(maps, dims)]
    t6 = tmat.reshape(2, 2, 2, 2, 2, 2)
    letters = [("i", "a", "I", "A"), ("j", "b", "J", "B"), ("k", "c", "K", "C")]
    ops = ["ijkIJK", "ABCabc"]
    args = [sig, t6]
    for p in range(3):
        if p != which:
            ops.append("".join(letters[p]))
            args.append(js[p])
    i, a, ii, aa = letters[which]
    nmat = np.einsum(",".join(ops) + "->" + i + a + ii + aa, *args, optimize=True)
    d = dims[which] * 2
    m = nmat.reshape(d, d).T
    return (m + m.conj().T) / 2


class ChoiOptimizer:
    """Maximize ``tr(J M)`` over Choi matrices of channels C^d_in -> C^2 with the conic backend."""

    def __init__(self, hidden: tuple[int, int], backend=None):
        from .inflation_sdp.backends import get_backend
        from .inflation_sdp.lmi import compile_lmi
        from .inflation_sdp.problem import SdpProblem, presolve

        self.d_in = hidden[0] * hidden[1]
        prob = SdpProblem("choi")
        blk = prob.add_block("J", (hidden[0], hidden[1], 2), real=False)
        strings = blk.basis.strings
        sel = np.flatnonzero(strings[:, -1] == 0)
        rhs = np.where((strings[sel] == 0).all(axis=1), float(self.d_in), 0.0)
        prob.add_constraint("trace_preserving", [("J", sel, 1.0)], rhs)
        prob.set_objective({"J": np.zeros(len(blk.basis))}, "maximize")
        self.problem = prob
        self.basis = blk.basis
        self.lmi = compile_lmi(prob, presolve(prob))
        self.backend = backend or get_backend()

    def maximize(self, m: np.ndarray) -> np.ndarray | None:
        w = self.basis.functional(m)
        p = self.lmi.param
        lmi = replace(self.lmi, q=-(p.D.T @ w), q0=-float(w @ p.e))
        raw = self.backend.solve_lmi(lmi)
        if raw.y is None:
            return None
        return normalize_choi(self.basis.matrix(lmi.coords(raw.y)), self.d_in)


def normalize_choi(j: np.ndarray, d_in: int) -> np.ndarray:
    """Nearest-by-construction exact CPTP map: clip negative eigenvalues, then rescale so ``tr_out J = I``."""
    lam, v = np.linalg.eigh((j + j.conj().T) / 2)
    j = (v * np.clip(lam, 0, None)) @ v.conj().T
    red = np.einsum("iaja->ij", j.reshape(d_in, 2, d_in, 2))
    lam, v = np.linalg.eigh(red)
    s = (v / np.sqrt(np.clip(lam, 1e-300, None))) @ v.conj().T
    k = np.kron(s, np.eye(2))
    j = k @ j @ k.conj().T
    return (j + j.conj().T) / 2


def random_choi(d_in: int, rng: np.random.Generator, env: int | None = None, real: bool = False) -> np.ndarray:
    """Choi matrix of ``X -> tr_env(V X V^dagger)`` for a random isometry ``V: C^d_in -> C^2 (x) C^env``."""
    env = d_in if env is None else env
    v = random_isometry(2 * env, d_in, rng, real=real).reshape(2, env, d_in)
    j = np.einsum("aei,bej->iajb", v, v.conj()).reshape(2 * d_in, 2 * d_in)
    return normalize_choi(j, d_in)


def random_model(h: Sequence[int], branches: int, rng: np.random.Generator, real: bool = False,
                 pure: bool = True, weights: np.ndarray | None = None) -> NetworkModel:
    h = tuple(h)
    sources, maps = [], []
    for _ in range(branches):
        srcs = []
        for i, k in SOURCE_SLOTS:
            rank = 1 if pure else int(rng.integers(1, h[i] * h[k] + 1))
            srcs.append(random_state((h[i], h[k]), rng, rank=rank, real=real))
        sources.append(tuple(srcs))
        js = []
        for p in range(3):
            d_in = h[2 * p] * h[2 * p + 1]
            env = None if pure else int(rng.choice([max(1, (d_in + 1) // 2), d_in]))
            js.append(random_choi(d_in, rng, env, real))
        maps.append(tuple(js))
    if weights is None:
        weights = rng.dirichlet(np.ones(branches))
    return NetworkModel(h, tuple(sources), tuple(maps), np.asarray(weights))


# -- optimization ---------------------------------------------------------------

@dataclass
class BranchRun:
    sources: list[np.ndarray]
    maps: list[np.ndarray]
    fidelity: float
    history: list[float] = field(default_factory=list)


def _optimize_branch(h, srcs, maps, tmat, t, cfg: SeesawConfig, choi: list[ChoiOptimizer]) -> BranchRun:
    srcs, maps = list(srcs), list(maps)
    f = _fidelity(t, branch_state(h, srcs, maps))
    hist = [f]
    for _ in range(cfg.max_iters):
        start = f
        for s in range(3):
            k = _source_operator(h, srcs, maps, tmat, s)
            lam, vec = np.linalg.eigh(k)
            if lam[-1] >= f:
                v = vec[:, -1]
                srcs[s] = np.outer(v, v.conj())
                f = _fidelity(t, branch_state(h, srcs, maps))
        for p in range(3):
            m = _channel_operator(h, srcs, maps, tmat, p)
            new = choi[p].maximize(m)
            if new is None:
                raise RuntimeError("channel update failed in the conic backend")
            trial = maps[:p] + [new] + maps[p + 1:]
            ft = _fidelity(t, branch_state(h, srcs, trial))
            if ft >= f:
                maps, f = trial, ft
        hist.append(f)
        if f - start < cfg.improvement_tol:
            break
    return BranchRun(srcs, maps, f, hist)


def _run_restart(args) -> tuple[NetworkModel, float, list[list[float]]] | None:
    target, cfg, seed_seq, backend_name = args
    from .inflation_sdp.backends import get_backend

    t = np.asarray(target, dtype=complex)
    tmat = np.outer(t, t.conj())
    h = (cfg.hidden_dim,) * 6
    rng = np.random.default_rng(seed_seq)
    backend = get_backend(backend_name)
    choi = [ChoiOptimizer((cfg.hidden_dim, cfg.hidden_dim), backend) for _ in range(3)]
    init = random_model(h, cfg.branches, rng, weights=np.full(cfg.branches, 1 / cfg.branches))
    runs = []
    try:
        for b in range(cfg.branches):
            srcs = [s.entries for s in init.sources[b]]
            runs.append(_optimize_branch(h, srcs, list(init.maps[b]), tmat, t, cfg, choi))
    except RuntimeError as exc:
        log.warning("restart skipped: %s", exc)
        return None
    # the objective is linear in the weights, so the best branch alone is optimal
    best = int(np.argmax([r.fidelity for r in runs]))
    weights = np.zeros(cfg.branches)
    weights[best] = 1.0
    srcs = tuple(tuple(density_matrix(s, (cfg.hidden_dim,) * 2) for s in r.sources) for r in runs)
    model = NetworkModel(h, srcs, tuple(tuple(r.maps) for r in runs), weights)
    return model, runs[best].fidelity, [r.history for r in runs]


def seesaw_maximize(target, cfg: SeesawConfig = SeesawConfig(), backend=None, jobs: int = 1,
                    history: list | None = None) -> tuple[NetworkModel, float]:
    """Best network-2 construction over ``cfg.restarts`` seeded restarts.

    The returned fidelity is recomputed from :func:`assemble_state` of the
    returned model.  Per-branch objective traces are appended to ``history``.
    """
    t = np.asarray(target, dtype=complex).ravel()
    if t.size != 8 or abs(np.linalg.norm(t) - 1) > 1e-9:
        raise DomainError("target must be a unit vector with 8 amplitudes")
    name = getattr(backend, "name", backend) if backend is not None else None
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    tasks = [(t, cfg, s, name) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_restart, tasks))
    else:
        results = [_run_restart(task) for task in tasks]
    best_model, best_f = None, -np.inf
    for res in results:
        if res is None:
            continue
        model, f, hist = res
        if history is not None:
            history.extend(hist)
        if f > best_f:
            best_model, best_f = model, f
    if best_model is None:
        raise SeesawFailure("all restarts failed")
    fid = _fidelity(t, assemble_state(best_model).entries)
    return best_model, fid


def generate_sound_states(n: int, cfg: SeesawConfig = SeesawConfig(), seed: int = 0,
                          real: bool = False) -> list[DensityMatrix]:
    """``n`` states produced by random network-2 models; identical output for identical arguments."""
    if n < 1:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    h = (cfg.hidden_dim,) * 6
    out = []
    for _ in range(n):
        pure = bool(rng.integers(2))
        model = random_model(h, int(rng.integers(1, cfg.branches + 1)), rng, real=real, pure=pure)
        out.append(assemble_state(model))
    return out
