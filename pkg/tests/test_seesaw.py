import json
from itertools import product

import numpy as np
import pytest

from netwit.inflation_sdp.backends import ClarabelBackend
from netwit.qlinalg import DomainError, density_matrix, fidelity_with_pure, pure_state
from netwit.seesaw import (
    ChoiOptimizer,
    NetworkModel,
    SeesawConfig,
    assemble_state,
    generate_sound_states,
    random_model,
    seesaw_maximize,
)
from netwit.states import ProductMeasurement, ghz_vector, w_vector
from netwit.witness import entropic_witness, fidelity_witness

PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0]) / np.sqrt(2)
ZERO2 = np.array([1, 0, 0, 0])


def proj(v):
    return pure_state(v, (2, 2))


def keep_one_choi(which):
    """Choi matrix of the channel on two qubits that keeps qubit ``which`` and discards the other."""
    j = np.zeros((2, 2, 2, 2, 2, 2))  # (in1, in2, out, in1', in2', out')
    for i1, i2, k1, k2 in product(range(2), repeat=4):
        if which == 0 and i2 == k2:
            j[i1, i2, i1, k1, k2, k1] = 1
        if which == 1 and i1 == k1:
            j[i1, i2, i2, k1, k2, k2] = 1
    return j.reshape(8, 8)


def kraus_from_choi(j, d_in):
    lam, v = np.linalg.eigh(j)
    ops = []
    for l, vec in zip(lam, v.T):
        if l > 1e-12:
            ops.append(np.sqrt(l) * vec.reshape(d_in, 2).T)
    return ops


def oracle_state(model):
    """Assemble through Kraus operators on an explicitly ordered hidden state."""
    rho = np.zeros((8, 8), dtype=complex)
    for w, srcs, maps in zip(model.weights, model.sources, model.maps):
        s0, s1, s2 = (s.entries.reshape(2, 2, 2, 2) for s in srcs)
        # s0 on (A', B''), s1 on (B', C''), s2 on (C', A''); hidden order A' A'' B' B'' C' C''
        sig = np.einsum("adAD,cfCF,ebEB->abcdefABCDEF", s0, s1, s2).reshape(64, 64)
        ka, kb, kc = (kraus_from_choi(j, 4) for j in maps)
        for a, b, c in product(ka, kb, kc):
            k = np.kron(np.kron(a, b), c)
            rho += w * k @ sig @ k.conj().T
    return rho


def model(srcs, maps, weights=None):
    weights = np.full(len(srcs), 1 / len(srcs)) if weights is None else weights
    return NetworkModel((2,) * 6, tuple(tuple(s) for s in srcs), tuple(tuple(m) for m in maps), np.asarray(weights))


def test_pass_through_model():
    # A keeps A', B keeps B'': the Bell pair shared by A' and B'' reaches A and B
    m = model([[proj(PHI_PLUS), proj(ZERO2), proj(ZERO2)]], [[keep_one_choi(0), keep_one_choi(1), keep_one_choi(0)]])
    expect = np.kron(np.outer(PHI_PLUS, PHI_PLUS), np.diag([1, 0]))
    assert np.allclose(assemble_state(m).entries, expect)


def test_w_construction_reaches_two_thirds():
    keep = keep_one_choi
    srcs = [
        [proj(PSI_PLUS), proj(ZERO2), proj(ZERO2)],  # A' B''
        [proj(ZERO2), proj(PSI_PLUS), proj(ZERO2)],  # B' C''
        [proj(ZERO2), proj(ZERO2), proj(PSI_PLUS)],  # C' A''
    ]
    maps = [
        [keep(0), keep(1), keep(0)],
        [keep(0), keep(0), keep(1)],
        [keep(1), keep(0), keep(0)],
    ]
    rho = assemble_state(model(srcs, maps))
    assert abs(fidelity_with_pure(rho, w_vector()) - 2 / 3) < 1e-12


def test_assemble_matches_kraus_oracle(rng):
    for _ in range(5):
        m = random_model((2,) * 6, 3, rng, pure=bool(rng.integers(2)))
        assert np.abs(assemble_state(m).entries - oracle_state(m)).max() < 1e-10


def test_product_model_is_not_flagged(rng):
    m = model([[proj(ZERO2), proj(ZERO2), proj(ZERO2)]], [[keep_one_choi(0)] * 3])
    rho = assemble_state(m)
    assert not entropic_witness(rho, ProductMeasurement.computational((2, 2, 2))).violated
    assert not fidelity_witness(rho, 2, 3).violated


def test_cptp_violation_is_rejected():
    bad = keep_one_choi(0) * 1.1
    with pytest.raises(DomainError):
        model([[proj(ZERO2)] * 3], [[bad, keep_one_choi(0), keep_one_choi(0)]])
    with pytest.raises(DomainError):
        model([[proj(ZERO2)] * 3], [[keep_one_choi(0)] * 3], weights=[0.5])


def test_config_validation():
    with pytest.raises(DomainError):
        SeesawConfig(restarts=0)
    with pytest.raises(DomainError):
        SeesawConfig(improvement_tol=0)


def test_model_json_round_trip(rng):
    m = random_model((2,) * 6, 2, rng, pure=False)
    back = NetworkModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.allclose(assemble_state(back).entries, assemble_state(m).entries)
    assert np.array_equal(back.weights, m.weights)


def test_choi_optimizer_finds_the_best_channel():
    # maximize <0|N(X)|0> for X = |psi><psi|: the best channel sends everything to |0>, value 1
    opt = ChoiOptimizer((2, 2), ClarabelBackend())
    psi = np.zeros(4)
    psi[1] = 1
    m = np.kron(np.outer(psi, psi).T, np.diag([1.0, 0.0]))
    j = opt.maximize(m)
    assert abs(np.trace(j @ m).real - 1) < 1e-6
    red = np.einsum("iaja->ij", j.reshape(4, 2, 4, 2))
    assert np.allclose(red, np.eye(4), atol=1e-8)


def test_product_target_reaches_one():
    t = np.zeros(8)
    t[0] = 1
    _, f = seesaw_maximize(t, SeesawConfig(restarts=2, branches=1, max_iters=50))
    assert abs(f - 1) < 1e-6


def test_history_is_monotone_and_runs_are_deterministic():
    cfg = SeesawConfig(restarts=2, branches=2, max_iters=30, seed=7)
    hist = []
    m1, f1 = seesaw_maximize(ghz_vector(), cfg, history=hist)
    m2, f2 = seesaw_maximize(ghz_vector(), cfg)
    assert f1 == f2
    assert json.dumps(m1.to_dict()) == json.dumps(m2.to_dict())
    for h in hist:
        assert (np.diff(h) >= -1e-9).all()
    assert abs(fidelity_with_pure(assemble_state(m1), ghz_vector()) - f1) < 1e-7


def test_target_validation():
    with pytest.raises(DomainError):
        seesaw_maximize(np.ones(8), SeesawConfig(restarts=1))


@pytest.mark.slow
def test_seesaw_lower_bounds(seesaw_ghz, seesaw_w, ghz_bound, w_bound):
    (mg, fg), (mw, fw) = seesaw_ghz, seesaw_w
    assert fg >= 0.51 and fw >= 0.66
    assert fg <= ghz_bound.objective_value + 1e-6
    assert fw <= w_bound.objective_value + 1e-6
    assert abs(fidelity_with_pure(assemble_state(mg), ghz_vector()) - fg) < 1e-7


def test_sound_states_are_deterministic_and_pass_witnesses():
    a = generate_sound_states(30, seed=4)
    b = generate_sound_states(30, seed=4)
    comp = ProductMeasurement.computational((2, 2, 2))
    for x, y in zip(a, b):
        assert x.entries.tobytes() == y.entries.tobytes()
        assert not entropic_witness(x, comp).violated
        assert fidelity_with_pure(x, ghz_vector()) <= (1 + np.sqrt(3)) / 4 + 1e-5
    with pytest.raises(DomainError):
        generate_sound_states(0)


def test_sound_states_are_real_when_asked():
    for rho in generate_sound_states(5, seed=2, real=True):
        assert np.abs(rho.entries.imag).max() < 1e-14
        density_matrix(rho.entries)
