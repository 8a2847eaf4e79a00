import itertools
import time

import numpy as np
import pytest

from netwit.qlinalg import partial_trace_array, partial_transpose_array, permute_array


def loop_partial_trace(m, dims, keep):
    """Reference partial trace by explicit summation over traced indices."""
    keep = sorted(keep)
    traced = [i for i in range(len(dims)) if i not in keep]
    kd = [dims[i] for i in keep]
    n = int(np.prod(kd)) if kd else 1
    out = np.zeros((n, n), dtype=complex)
    t = np.asarray(m).reshape(tuple(dims) * 2)
    for r in itertools.product(*[range(d) for d in kd]):
        for c in itertools.product(*[range(d) for d in kd]):
            total = 0j
            for s in itertools.product(*[range(dims[i]) for i in traced]):
                row = [0] * len(dims)
                col = [0] * len(dims)
                for pos, i in enumerate(keep):
                    row[i], col[i] = r[pos], c[pos]
                for pos, i in enumerate(traced):
                    row[i] = col[i] = s[pos]
                total += t[tuple(row) + tuple(col)]
            out[np.ravel_multi_index(r, kd) if kd else 0, np.ravel_multi_index(c, kd) if kd else 0] = total
    return out


def inflation_violations(tau, gamma, rho=None):
    """Largest violation of every ring-inflation constraint, computed with plain matrix operations."""
    q6 = (2,) * 6
    t, g = np.asarray(tau), np.asarray(gamma)
    pt = lambda m, keep: partial_trace_array(m, q6, keep)
    out = {
        "tau_trace": abs(np.trace(t) - 1),
        "gamma_trace": abs(np.trace(g) - 1),
        "tau_psd": -np.linalg.eigvalsh(t)[0],
        "gamma_psd": -np.linalg.eigvalsh(g)[0],
        "tau_swap": np.abs(permute_array(t, q6, (3, 4, 5, 0, 1, 2)) - t).max(),
        "gamma_swap": np.abs(permute_array(g, q6, (3, 4, 5, 0, 1, 2)) - g).max(),
        "copies": np.abs(pt(t, (0, 1, 2)) - pt(t, (3, 4, 5))).max(),
        "ab": np.abs(pt(g, (0, 1, 3, 4)) - pt(t, (0, 1, 3, 4))).max(),
        "bc": np.abs(pt(g, (1, 2, 4, 5)) - pt(t, (1, 2, 4, 5))).max(),
    }
    # gamma on (C3, A4, C4, A3) against tau on (C1, A1, C2, A2)
    g_ca = permute_array(pt(g, (0, 2, 3, 5)), (2,) * 4, (1, 2, 3, 0))
    t_ca = permute_array(pt(t, (0, 2, 3, 5)), (2,) * 4, (1, 0, 3, 2))
    out["ca"] = np.abs(g_ca - t_ca).max()
    out["ppt_tau"] = -np.linalg.eigvalsh(partial_transpose_array(t, q6, (3, 4, 5)))[0]
    for name, keep, part in (("ppt_b4", (0, 1, 2, 4), (3,)), ("ppt_c4", (1, 2, 3, 5), (3,)), ("ppt_a3", (0, 2, 3, 4), (0,))):
        out[name] = -np.linalg.eigvalsh(partial_transpose_array(pt(g, keep), (2,) * 4, part))[0]
    if rho is not None:
        out["fixed"] = np.abs(pt(t, (0, 1, 2)) - np.asarray(rho)).max()
    return out


# criterion lines printed by the acceptance suite, shown again in the terminal summary
ACCEPTANCE_LINES: list[str] = []
TIMINGS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def timed(key, fn):
    t0 = time.perf_counter()
    out = fn()
    TIMINGS[key] = time.perf_counter() - t0
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# expensive solves shared between modules


@pytest.fixture(scope="session")
def ghz_bound():
    from netwit.inflation_sdp import build_ring_inflation, solve
    from netwit.states import ghz_vector

    return timed("ghz_bound", lambda: solve(build_ring_inflation(target=ghz_vector())))


@pytest.fixture(scope="session")
def w_bound():
    from netwit.inflation_sdp import build_ring_inflation, solve
    from netwit.states import w_vector

    return timed("w_bound", lambda: solve(build_ring_inflation(target=w_vector())))


@pytest.fixture(scope="session")
def ghz_scan():
    from netwit.postselect import critical_probability
    from netwit.states import ghz_vector

    return timed("ghz_scan", lambda: critical_probability(ghz_vector(), 0.01, name="ghz"))


@pytest.fixture(scope="session")
def w_scan():
    from netwit.postselect import critical_probability
    from netwit.states import w_vector

    return timed("w_scan", lambda: critical_probability(w_vector(), 0.01, name="w"))


@pytest.fixture(scope="session")
def seesaw_ghz():
    from netwit.seesaw import SeesawConfig, seesaw_maximize
    from netwit.states import ghz_vector

    return timed("seesaw_ghz", lambda: seesaw_maximize(ghz_vector(), SeesawConfig(restarts=20, seed=0)))


@pytest.fixture(scope="session")
def seesaw_w():
    from netwit.seesaw import SeesawConfig, seesaw_maximize
    from netwit.states import w_vector

    return timed("seesaw_w", lambda: seesaw_maximize(w_vector(), SeesawConfig(restarts=20, seed=0)))
