"""bellcert: simulate the two-round Bell scenario and certify the
entangling interaction between the rounds from its statistics."""

from .bell import (
    BellExpression,
    build_bell_operator,
    classical_bound,
    check_sos_relations,
    extra_statistics_check,
    quantum_value,
    sos_residual,
    tilde_observables,
)
from .certify import (
    CertificationReport,
    LocalFrame,
    certify_interaction,
    certify_source_state,
    check_anticommutation,
    check_projectivity,
    extract_local_frame,
    run_full_certification,
)
from .linalg import (
    EigenDecomposition,
    factorize_tensor_product,
    herm_eig,
    kron,
    operator_block,
    partial_trace,
    permute_subsystems,
    sign_operator,
)
from .quantum import (
    DichotomicObservable,
    Interaction,
    QuantumState,
    born_probability,
    evolve,
    expectation,
    post_measurement_state,
    pure_state,
    random_unitary,
    white_noise_mix,
)
from .reference import entangling_unitary, ghz_like_vector, reference_strategy
from .scenario import (
    CorrelationRecord,
    Strategy,
    repeatability_spotcheck,
    run_scenario,
    scramble_strategy,
)
from .seesaw import SeesawConfig, seesaw_maximize, seesaw_restarts

__version__ = "0.1.0"
