"""Exact small-system backend: states, circuits, correlation and commutator tails."""
from .circuit import (
    GATES,
    Circuit,
    EvolvedOperator,
    Gate,
    brickwork,
    circuit_state,
    heisenberg,
    light_cone,
    light_cone_relation,
)
from .correlation import (
    CorrEstimate,
    CorrMatrixResult,
    balls,
    corr_exact,
    corr_matrix,
    corr_pauli,
    reduced_covariance_operator,
)
from .dynamics import commutator_exact, commutator_matrix, commutator_pauli, spread_profile
from .ising import ising_1d_corr
from .perturb import apply_localized_perturbation
from .state import (
    SpinState,
    apply_unitary,
    bell_pairs,
    cluster,
    expectation,
    ghz,
    ising_state,
    product,
    random_product,
    reduced_density,
)
from .specs import circuit_from_spec, is_circuit_spec, state_from_spec
