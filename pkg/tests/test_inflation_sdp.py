import numpy as np
import pytest

from conftest import inflation_violations
from netwit.inflation_sdp import build_ring_inflation, certify_state, extract_dual_witness, solve
from netwit.inflation_sdp.backends import INFEASIBLE
from netwit.qlinalg import DomainError, density_matrix, maximally_mixed, partial_trace, tensor
from netwit.seesaw import SeesawConfig, generate_sound_states
from netwit.states import ghz_state, ghz_vector, w_vector

GHZ_OPT = (1 + np.sqrt(3)) / 4

pytestmark = pytest.mark.slow


def ghz_mixture(fidelity):
    v = (fidelity - 1 / 8) / (7 / 8)
    return density_matrix(v * ghz_state().entries + (1 - v) * np.eye(8) / 8)


def test_exactly_one_input_required():
    with pytest.raises(TypeError):
        build_ring_inflation()
    with pytest.raises(TypeError):
        build_ring_inflation(target=ghz_vector(), fixed_rho=ghz_state())


def test_bad_inputs():
    with pytest.raises(DomainError):
        build_ring_inflation(target=np.ones(8))
    with pytest.raises(DomainError):
        build_ring_inflation(fixed_rho=maximally_mixed((2, 2)))
    with pytest.raises(DomainError):
        certify_state(np.eye(8) / 8)


def test_maximally_mixed_certificate_satisfies_every_constraint():
    rho = np.eye(8) / 8
    viol = inflation_violations(np.kron(rho, rho), np.eye(64) / 64, rho)
    assert max(viol.values()) < 1e-12


def test_ghz_bound(ghz_bound):
    assert ghz_bound.ok
    assert abs(ghz_bound.objective_value - GHZ_OPT) < 1e-3


def test_w_bound(w_bound):
    assert w_bound.ok
    assert abs(w_bound.objective_value - 0.7602) < 1e-3


@pytest.mark.parametrize("which", ["ghz", "w"])
def test_optimal_certificate_meets_constraints(which, ghz_bound, w_bound):
    cert = ghz_bound if which == "ghz" else w_bound
    viol = inflation_violations(cert.tau.entries, cert.gamma.entries)
    assert max(viol.values()) <= 1e-6, viol
    assert cert.stats["max_equality_residual"] <= 1e-6
    # the objective is the fidelity of the triangle marginal
    target = ghz_vector() if which == "ghz" else w_vector()
    rho = partial_trace(cert.tau, [0, 1, 2]).entries
    assert abs(np.vdot(target, rho @ target).real - cert.objective_value) < 1e-6


def test_symmetry_reduction_is_exact(ghz_bound):
    plain = solve(build_ring_inflation(target=ghz_vector(), symmetry_reduction=False))
    assert plain.ok
    assert abs(plain.objective_value - ghz_bound.objective_value) < 1e-5


def test_dropping_ppt_never_lowers_the_optimum(ghz_bound):
    loose = solve(build_ring_inflation(target=ghz_vector(), ppt=("tau",)))
    looser = solve(build_ring_inflation(target=ghz_vector(), ppt=()))
    assert loose.ok and looser.ok
    assert looser.objective_value >= loose.objective_value - 1e-6
    assert loose.objective_value >= ghz_bound.objective_value - 1e-6


def test_party_relabeling_leaves_optimum_unchanged():
    rng = np.random.default_rng(3)
    v = rng.normal(size=8)
    v /= np.linalg.norm(v)
    base = solve(build_ring_inflation(target=v)).objective_value
    for perm in ((1, 2, 0), (1, 0, 2)):
        w = v.reshape(2, 2, 2).transpose(perm).ravel()
        assert abs(solve(build_ring_inflation(target=w)).objective_value - base) < 1e-5


def test_certify_examples():
    mixed = certify_state(maximally_mixed((2, 2, 2)))
    assert not mixed.certified_genuine and mixed.verdict == "inconclusive"
    ghz = certify_state(ghz_state())
    assert ghz.certified_genuine and ghz.certificate.solver_status == INFEASIBLE
    assert certify_state(ghz_mixture(0.69)).certified_genuine


def test_certification_agrees_with_bound(ghz_bound):
    # just below the optimum the mixture is consistent with the relaxation
    assert not certify_state(ghz_mixture(ghz_bound.objective_value - 0.01)).certified_genuine


def test_fixed_marginal_solution_is_a_certificate():
    rho = maximally_mixed((2, 2, 2))
    cert = certify_state(rho).certificate
    viol = inflation_violations(cert.tau.entries, cert.gamma.entries, rho.entries)
    assert max(viol.values()) <= 1e-6


def test_dual_witness(ghz_bound):
    wit = extract_dual_witness(ghz_bound)
    assert abs(wit.bound - ghz_bound.objective_value) < 1e-5
    assert wit.value(maximally_mixed((2, 2, 2))) <= GHZ_OPT + 1e-6
    assert wit.violated_by(ghz_state())
    optimizer = partial_trace(ghz_bound.tau, [0, 1, 2])
    assert abs(wit.value(optimizer) - ghz_bound.objective_value) < 1e-5
    for rho in generate_sound_states(100, SeesawConfig(), seed=11):
        assert wit.value(rho) <= wit.bound + 1e-6


def test_dual_witness_needs_target_problem():
    cert = certify_state(maximally_mixed((2, 2, 2))).certificate
    with pytest.raises(ValueError):
        extract_dual_witness(cert)


def test_product_states_are_feasible():
    # a product of pure qubits is trivially a network state
    rng = np.random.default_rng(5)
    qubits = []
    for _ in range(3):
        a = rng.normal(size=2)
        a /= np.linalg.norm(a)
        qubits.append(density_matrix(np.outer(a, a)))
    rho = tensor(tensor(qubits[0], qubits[1]), qubits[2])
    assert not certify_state(rho).certified_genuine
