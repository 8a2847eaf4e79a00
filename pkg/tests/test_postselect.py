import numpy as np
import pytest

from netwit.inflation_sdp import certify_state
from netwit.postselect import build_postselected, critical_probability, max_postselected_fidelity
from netwit.qlinalg import DomainError, density_matrix
from netwit.states import ghz_state, ghz_vector

pytestmark = pytest.mark.slow


def test_domain_errors():
    for p in (0.0, -0.2, 1.2):
        with pytest.raises(DomainError):
            build_postselected(ghz_vector(), p)
    with pytest.raises(DomainError):
        critical_probability(ghz_vector(), 1e-4)


def test_full_detection_reproduces_the_plain_bound(ghz_bound):
    s = max_postselected_fidelity(ghz_vector(), 1.0)
    assert abs(s.max_fidelity - ghz_bound.objective_value) < 1e-5


def test_low_detection_allows_perfect_fidelity():
    p = 0.1
    assert abs(max_postselected_fidelity(ghz_vector(), p).max_fidelity - 1) < 1e-4
    # the explicit adversary: true state p |GHZ><GHZ| + (1-p) I/8 is consistent with the relaxation
    rho = density_matrix(p * ghz_state().entries + (1 - p) * np.eye(8) / 8)
    assert not certify_state(rho).certified_genuine


def test_high_detection_stays_below_one():
    assert max_postselected_fidelity(ghz_vector(), 0.9).max_fidelity < 1 - 1e-4


def test_scan_invariants(ghz_scan, ghz_bound):
    ps = [s.p for s in ghz_scan.samples]
    fs = [s.max_fidelity for s in ghz_scan.samples]
    assert ps == sorted(ps)
    assert all(b <= a + 1e-6 for a, b in zip(fs, fs[1:]))
    assert all(f >= ghz_bound.objective_value - 1e-6 for f in fs)
    lo, hi = ghz_scan.bracket
    assert hi - lo <= ghz_scan.tol_p
    assert lo < ghz_scan.p_critical < hi
    d = ghz_scan.to_dict()
    assert list(d) == ["target", "tol_p", "p_critical", "samples"]
    assert set(d["samples"][0]) == {"p", "max_fidelity", "status"}


def test_critical_probabilities(ghz_scan, w_scan):
    assert abs(ghz_scan.p_critical - 0.685) <= 0.01
    assert abs(w_scan.p_critical - 0.765) <= 0.01


def test_coarse_scan_brackets_fine_result(ghz_scan):
    coarse = critical_probability(ghz_vector(), 0.05)
    lo, hi = coarse.bracket
    assert lo <= ghz_scan.p_critical <= hi
