"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, TIMINGS, loop_partial_trace
from netwit.inflation_sdp import certify_state, extract_dual_witness
from netwit.qlinalg import (
    density_matrix,
    fidelity_with_pure,
    partial_trace,
    partial_trace_array,
    partial_transpose_array,
    permute_array,
    random_state,
    tensor,
    von_neumann_entropy,
)
from netwit.seesaw import SeesawConfig, generate_sound_states
from netwit.states import (
    JointDistribution,
    ProductMeasurement,
    coincidence_probability,
    ghz_state,
    ghz_vector,
    measure,
    mutual_information,
    shannon_entropy,
)
from netwit.witness import entropic_witness, fidelity_witness, ghz_fidelity_bound, lemma_bounds

GHZ_OPT = (1 + np.sqrt(3)) / 4
SOUND_REAL = 196  # real-amplitude states get the full SDP check cheaply
SOUND_COMPLEX = 4

pytestmark = pytest.mark.slow


def report(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_analytic_bound():
    f = ghz_fidelity_bound(2, 3)
    ok = abs(f - 4 / 33 * (6 + np.sqrt(3))) < 1e-12 and abs(f - 0.9372) <= 5e-5
    report(1, ok, f"F_GHZ bound = {f:.6f} (reference 0.9372, tol 5e-5)")


def test_criterion_02_general_k_formula():
    worst = max(abs(ghz_fidelity_bound(d, 3) - 2 * d * (3 * d + np.sqrt(2 * d - 1)) / (1 - 2 * d + 9 * d * d))
                for d in range(2, 11))
    top = max(ghz_fidelity_bound(d, k) for d in range(2, 11) for k in range(3, 9))
    report(2, worst <= 1e-12 and top < 1, f"k=3 max deviation {worst:.1e} (tol 1e-12); largest bound {top:.6f} < 1")


def test_criterion_03_sdp_bound_ghz(ghz_bound):
    v = ghz_bound.objective_value
    t = TIMINGS.get("ghz_bound", float("nan"))
    ok = ghz_bound.ok and abs(v - GHZ_OPT) <= 1e-3 and not t > 300
    report(3, ok, f"GHZ optimum {v:.6f} vs (1+sqrt3)/4 = {GHZ_OPT:.6f} (tol 1e-3), {t:.0f} s")


def test_criterion_04_sdp_bound_w(w_bound):
    v = w_bound.objective_value
    t = TIMINGS.get("w_bound", float("nan"))
    ok = w_bound.ok and abs(v - 0.7602) <= 1e-3 and not t > 300
    report(4, ok, f"W optimum {v:.6f} vs 0.7602 (tol 1e-3), {t:.0f} s")


def test_criterion_05_postselection(ghz_scan, w_scan):
    g, w = ghz_scan.p_critical, w_scan.p_critical
    tg, tw = TIMINGS.get("ghz_scan", float("nan")), TIMINGS.get("w_scan", float("nan"))
    ok = (g is not None and w is not None and abs(g - 0.685) <= 0.01 and abs(w - 0.765) <= 0.01
          and not tg > 1800 and not tw > 1800)
    report(5, ok, f"p_c GHZ {g:.4f} (0.685), W {w:.4f} (0.765), tol 0.01; {tg:.0f} s / {tw:.0f} s")


def test_criterion_06_seesaw(seesaw_ghz, seesaw_w):
    fg, fw = seesaw_ghz[1], seesaw_w[1]
    report(6, fg >= 0.51 and fw >= 0.66, f"see-saw GHZ {fg:.6f} >= 0.51 (stretch 0.5170), W {fw:.6f} >= 0.66")


def test_criterion_07_sandwich(seesaw_ghz, seesaw_w, ghz_bound, w_bound):
    ok = seesaw_ghz[1] <= ghz_bound.objective_value + 1e-6 and seesaw_w[1] <= w_bound.objective_value + 1e-6
    report(7, ok, f"GHZ {seesaw_ghz[1]:.5f} <= {ghz_bound.objective_value:.5f}, "
                  f"W {seesaw_w[1]:.5f} <= {w_bound.objective_value:.5f}")


def test_criterion_08_entropic_witness():
    margins = {}
    ok = True
    for d in (2, 3):
        r = entropic_witness(ghz_state(d, 3), ProductMeasurement.computational((d,) * 3))
        margins[d] = r.margin
        ok &= r.violated and abs(r.margin - np.log2(d)) < 1e-9
    mix = np.zeros((8, 8))
    mix[0, 0] = mix[7, 7] = 0.5
    r = entropic_witness(density_matrix(mix), ProductMeasurement.computational((2, 2, 2)))
    ok &= r.margin <= r.tol and not r.violated
    report(8, ok, f"margins GHZ_2 {margins[2]:.6f}, GHZ_3 {margins[3]:.6f}, classical mixture {r.margin:.1e}")


def test_criterion_09_soundness(ghz_bound):
    cfg = SeesawConfig()
    states = generate_sound_states(SOUND_REAL, cfg, seed=2024, real=True)
    states += generate_sound_states(SOUND_COMPLEX, cfg, seed=2025)
    rng = np.random.default_rng(99)
    comp = ProductMeasurement.computational((2, 2, 2))
    dual = extract_dual_witness(ghz_bound)
    witness_hits, fidelity_hits, sdp_hits = [], [], []
    for i, rho in enumerate(states):
        for meas in (comp, ProductMeasurement.random((2, 2, 2), rng)):
            if entropic_witness(rho, meas).violated:
                witness_hits.append(i)
        if fidelity_witness(rho, 2, 3).violated:
            witness_hits.append(i)
        if fidelity_with_pure(rho, ghz_vector()) > GHZ_OPT + 1e-5 or dual.violated_by(rho):
            fidelity_hits.append(i)
        if certify_state(rho).certified_genuine:
            sdp_hits.append(i)
    ok = not (witness_hits or fidelity_hits or sdp_hits)
    report(9, ok, f"{len(states)} states ({SOUND_REAL} real, {SOUND_COMPLEX} complex): witness violations "
                  f"{len(witness_hits)}, GHZ-fidelity excess {len(fidelity_hits)}, SDP infeasible {len(sdp_hits)}")


def _transitivity(rng, n):
    worst = np.inf
    for _ in range(n):
        card = int(rng.integers(2, 5))
        p = JointDistribution.random((card,) * 3, rng, concentration=float(rng.choice([0.05, 0.3, 1.0])))
        c = lambda x, y: coincidence_probability(p, x, y)
        mi = lambda x, y: mutual_information(p, [x], [y])
        worst = min(worst, c(0, 2) - (c(0, 1) + c(1, 2) - 1),
                    mi(0, 2) - (mi(0, 1) + mi(1, 2) - shannon_entropy(p, [1])))
    return worst


def _near_ghz_state(rng, dims):
    """Random states biased towards high GHZ fidelity on the first three systems."""
    core = ghz_state()
    extra = random_state(dims[3:], rng, rank=int(rng.integers(1, 3))) if len(dims) > 3 else None
    base = tensor(core, extra) if extra is not None else core
    noise = random_state(dims, rng, rank=int(rng.integers(1, int(np.prod(dims)) + 1)))
    v = rng.random()
    return density_matrix(v * base.entries + (1 - v) * noise.entries, dims)


def _coincidence_information(rng, n):
    worst23 = np.inf
    for i in range(n):
        dims4 = (2, 2, 2, 2)
        sig = _near_ghz_state(rng, dims4) if i % 2 else random_state(dims4, rng, rank=int(rng.integers(1, 17)))
        abc = partial_trace(sig, [0, 1, 2])
        f = fidelity_with_pure(abc, ghz_vector())
        p = measure(sig, ProductMeasurement.computational(dims4))
        worst23 = min(worst23, lemma_bounds(f, 2)[0] - coincidence_probability(p, 0, 3))
        meas = ProductMeasurement.random(dims4, rng)
        q = measure(sig, meas)
        s_a = von_neumann_entropy(partial_trace(sig, [0]))
        s_a_given_bc = von_neumann_entropy(abc) - von_neumann_entropy(partial_trace(sig, [1, 2]))
        worst23 = min(worst23, s_a + s_a_given_bc - mutual_information(q, [0], [3]))
        rho = abc if i % 2 else random_state((2, 2, 2), rng, rank=int(rng.integers(1, 9)))
        f3 = fidelity_with_pure(rho, ghz_vector())
        p3 = measure(rho, ProductMeasurement.computational((2, 2, 2)))
        worst23 = min(worst23, min(coincidence_probability(p3, x, y) for x, y in ((0, 1), (1, 2), (0, 2))) - f3)
    return worst23


def _qlinalg(rng, n):
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(1, 4))
        dims = tuple(int(d) for d in rng.integers(1, 4, size=k))
        if np.prod(dims) > 12:
            dims = dims[:2]
        rho = random_state(dims, rng, rank=int(rng.integers(1, int(np.prod(dims)) + 1)))
        m = rho.entries
        keep = sorted(rng.choice(len(dims), size=int(rng.integers(1, len(dims) + 1)), replace=False).tolist())
        worst = max(worst, np.abs(partial_trace_array(m, dims, keep) - loop_partial_trace(m, dims, keep)).max())
        part = rng.choice(len(dims), size=int(rng.integers(0, len(dims) + 1)), replace=False).tolist()
        pt = partial_transpose_array(m, dims, part)
        worst = max(worst, abs(np.trace(pt) - 1), np.abs(pt - pt.conj().T).max(),
                    np.abs(partial_transpose_array(pt, dims, part) - m).max())
        perm = rng.permutation(len(dims)).tolist()
        pm = permute_array(m, dims, perm)
        worst = max(worst, np.abs(np.linalg.eigvalsh(pm) - np.linalg.eigvalsh(m)).max())
        inv = np.argsort(perm).tolist()
        worst = max(worst, np.abs(permute_array(pm, [dims[p] for p in perm], inv) - m).max())
    return worst


def test_criterion_10_property_suites():
    rng = np.random.default_rng(20240601)
    w1 = _transitivity(rng, 10_000)
    w23 = _coincidence_information(rng, 1_000)
    wq = _qlinalg(rng, 1_000)
    ok = w1 >= -1e-10 and w23 >= -1e-9 and wq <= 1e-10
    report(10, ok, f"transitivity min slack {w1:.1e} (10^4 pmfs), coincidence/information min slack {w23:.1e} (10^3 states), "
                   f"qlinalg max error {wq:.1e} (10^3 instances)")
