"""Selective chi-matrix estimation for n-qubit quantum channels.

The package simulates completely positive trace-preserving maps, builds the
MUB state 2-design, and estimates individual chi-matrix coefficients by the
randomized survival / ancilla-polarization protocols — with an exact
brute-force oracle to verify every estimate at desk scale.
"""

from .pauli import (
    DENSE_QUBIT_CAP,
    MUB_QUBIT_CAP,
    DenseCapError,
    MubClass,
    PauliLabel,
    all_labels,
    commutation_vector,
    label_from_index,
    label_index,
    mub_class,
    mub_classes,
    pauli_matrix,
    pauli_mul,
    solve_label_from_constraints,
    symplectic_product,
)
from .channels import (
    Channel,
    ChannelSpecError,
    ChiMatrix,
    ChiValidationReport,
    KrausSet,
    apply_channel,
    as_kraus,
    channel_factory,
    channel_spec_sha256,
    chi_to_kraus,
    kraus_to_chi,
    load_channel_spec,
    modified_channel_diag,
    modified_channel_offdiag,
    validate_chi,
)
from .mub import (
    DesignStateId,
    design_average_survival,
    design_basis,
    measure_in_base,
    mub_state,
    sample_design_state,
    transition_target,
)
from .estimator import (
    Estimate,
    EstimatorConfig,
    Triplet,
    TripletLogError,
    estimate_chi_diag,
    estimate_chi_offdiag,
    estimate_diag_from_triplets,
    estimation_report,
    read_triplet_log,
    required_sample_size,
    run_triplet_experiments,
    sieve_large_diagonals,
    write_triplet_log,
)
from .oracle import (
    OracleReport,
    exact_average_fidelity,
    exact_chi,
    exact_offdiag_average,
    haar_closed_form,
    oracle_report,
    random_channel,
)

__version__ = "0.1.0"
