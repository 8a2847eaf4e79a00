"""Tools for detecting and bounding genuine network multipartite entanglement."""

from .qlinalg import (
    DensityMatrix,
    DomainError,
    HermitianOperator,
    Tolerances,
    fidelity_with_pure,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    tensor,
    von_neumann_entropy,
)
from .states import (
    JointDistribution,
    ProductMeasurement,
    coincidence_probability,
    ghz_state,
    ghz_vector,
    measure,
    mutual_information,
    shannon_entropy,
    w_state,
    w_vector,
)
from .witness import (
    WitnessReport,
    entropic_witness,
    entropic_witness_k,
    fidelity_witness,
    ghz_fidelity_bound,
    lemma_bounds,
)

__version__ = "0.1.0"
