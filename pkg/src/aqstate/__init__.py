"""aqstate: approximate quantum states from randomized single-qubit
measurements, with seminorm-bounded observable estimation.

An N-qubit state is summarized by M snapshots, each recording one random
measurement direction and one +/-1 outcome per qubit (3MN numbers total).
Any Pauli-basis observable can then be estimated from the snapshots alone,
with statistical error bounded by its seminorm divided by sqrt(M).
"""

from .pauli import (
    FactoredObservable,
    Observable,
    PauliAxis,
    PauliString,
    SingleQubitOperator,
    factored_seminorms,
    load_observable,
    normalize_to_unit_seminorm,
    pair_compat,
    projector_factored,
    projector_pauli_expansion,
    projector_seminorms,
    save_observable,
    seminorm,
    seminorm1,
    seminorm2,
    shot_budget,
    std_bound,
    weight,
)
from .statevector import (
    Circuit,
    Gate,
    Statevector,
    apply_gate,
    apply_xy,
    exact_expectation,
    exact_expectation_factored,
    gate_matrix,
    haar_random_state,
    load_circuit,
    random_prep_circuit,
    run_circuit,
    save_circuit,
)
from .snapshots import (
    ApproximateState,
    Direction,
    NoiseModel,
    SnapshotFormatError,
    SnapshotRecord,
    acquire_snapshot,
    build_approximate_state,
    deserialize,
    kernel_matrix,
    load_snapshots,
    measurement_unitary,
    sample_direction,
    save_snapshots,
    serialize,
    snapshots_from_state,
)
from .estimator import (
    EstimateResult,
    estimate_factored,
    estimate_observable,
    estimate_pauli_string,
    p_odd,
    predict_attenuated,
    r1_operator,
    r1_pauli,
    reconstruct_density,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    HaarMixedTermResult,
    NoiseAttenuationReport,
    haar_mixed_term_check,
    noise_attenuation_study,
    random_observable,
    random_projector,
    run_experiment,
    run_verification,
)

__version__ = "0.1.0"
