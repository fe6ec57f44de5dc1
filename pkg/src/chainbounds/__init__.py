"""Spectral gaps of finite Markov chains and Bernstein-type bound checking.

Computes iterated Poincare, symmetric, absolute, ordinary and (truncated)
pseudo spectral gaps of transition and rate matrices in the mu-weighted
geometry; evaluates the matching exponential-moment and tail bounds with
exact constants; and verifies them against exact transfer-operator /
Feynman-Kac oracles and seeded Monte Carlo simulation.
"""

from .bounds import (
    BoundQuery,
    BoundResult,
    bound_sweep,
    c_theta,
    mgf_bound_continuous,
    mgf_bound_discrete,
    optimal_theta_continuous,
    optimal_theta_discrete,
    sweep_to_csv,
    tail_bound,
    tail_bound_continuous,
    tail_bound_discrete,
)
from .chain_core import (
    ChainData,
    Distribution,
    GeneratorMatrix,
    Observable,
    StateSpace,
    TransitionMatrix,
    additive_symmetrization,
    adjoint,
    check_invariant,
    is_irreducible,
    load_chain,
    make_distribution,
    make_observable,
    parse_chain,
    radon_nikodym_norm,
    stationary_distribution,
    uniform_distribution,
    validate_generator,
    validate_transition_matrix,
)
from .errors import ChainBoundsError
from .exact_oracle import (
    ConditionalMgf,
    TransferOperator,
    conditional_mgf_continuous,
    conditional_mgf_discrete,
    exact_log_mgf_discrete,
    exact_mgf_continuous,
    exact_mgf_discrete,
    exact_tail_discrete,
    matrix_exponential,
    transfer_operator,
    verify_a_prime_identity,
    verify_laplacian_identity,
)
from .simulate import (
    SimConfig,
    SimReport,
    clopper_pearson,
    empirical_mgf,
    empirical_tail,
    replica_rng,
    sample_ctmc,
    sample_dtmc,
)
from .spectral import (
    GapReport,
    Laplacian,
    PseudoGapResult,
    WeightedOperator,
    absolute_gap,
    embed_weighted,
    gap_report,
    generator_gap_report,
    ip_gap,
    ip_gap_generator,
    ip_gap_minimizer,
    laplacian,
    numerical_radius_complex,
    numerical_radius_real,
    ordinary_gap,
    pseudo_gap,
    symmetric_gap,
    verify_iterated_poincare,
)

__version__ = "0.1.0"

__all__ = [
    "BoundQuery",
    "BoundResult",
    "ChainBoundsError",
    "ChainData",
    "ConditionalMgf",
    "Distribution",
    "GapReport",
    "GeneratorMatrix",
    "Laplacian",
    "Observable",
    "PseudoGapResult",
    "SimConfig",
    "SimReport",
    "StateSpace",
    "TransferOperator",
    "TransitionMatrix",
    "WeightedOperator",
    "absolute_gap",
    "additive_symmetrization",
    "adjoint",
    "bound_sweep",
    "c_theta",
    "check_invariant",
    "clopper_pearson",
    "conditional_mgf_continuous",
    "conditional_mgf_discrete",
    "empirical_mgf",
    "empirical_tail",
    "embed_weighted",
    "exact_log_mgf_discrete",
    "exact_mgf_continuous",
    "exact_mgf_discrete",
    "exact_tail_discrete",
    "gap_report",
    "generator_gap_report",
    "ip_gap",
    "ip_gap_generator",
    "ip_gap_minimizer",
    "is_irreducible",
    "laplacian",
    "load_chain",
    "make_distribution",
    "make_observable",
    "matrix_exponential",
    "mgf_bound_continuous",
    "mgf_bound_discrete",
    "numerical_radius_complex",
    "numerical_radius_real",
    "optimal_theta_continuous",
    "optimal_theta_discrete",
    "ordinary_gap",
    "parse_chain",
    "pseudo_gap",
    "radon_nikodym_norm",
    "replica_rng",
    "sample_ctmc",
    "sample_dtmc",
    "stationary_distribution",
    "sweep_to_csv",
    "symmetric_gap",
    "tail_bound",
    "tail_bound_continuous",
    "tail_bound_discrete",
    "transfer_operator",
    "uniform_distribution",
    "validate_generator",
    "validate_transition_matrix",
    "verify_a_prime_identity",
    "verify_iterated_poincare",
    "verify_laplacian_identity",
]
