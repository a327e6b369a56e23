"""Neural Metropolis runs: binary choice kernels, diffusion comparators,
column-stochastic chain algebra, stopped-run outcomes, and their limits."""

from .errors import (
    ColumnSumViolation,
    DeadlineNotExact,
    DeadlineNotSupported,
    DimensionMismatch,
    EigenFailure,
    EmptyCell,
    InconsistentTandem,
    InvalidSError,
    IterationCap,
    KernelAxiomViolation,
    MaxStepsExceeded,
    NmaError,
    NoConvergenceError,
    NoInformativePair,
    NonInjectiveNu,
    NonSquareError,
    NotChronometricError,
    NotNiceExploration,
    NotPositiveError,
    NotPrimitiveError,
    NotReversibleError,
    NotTransitiveError,
    ParseError,
    RegularityViolated,
    SamplerRequired,
    SingularSolve,
    StepTooLarge,
    TandemAxiomViolation,
    TandemRequired,
)
from .stopping import (
    CustomPmf,
    Deadline,
    Fixed,
    Geometric,
    NegativeBinomial,
    StoppingNumber,
)
from .matrices import (
    KolmogorovResult,
    MatrixFlags,
    StochasticMatrix,
    build_stochastic_matrix,
    classify,
    kolmogorov_check,
    matrix_generating_function,
    probability_vector,
    spectral_generating_matrices,
    stationary_distribution,
    survival_generating_matrix,
)
from .kernels import (
    BinaryChoiceKernel,
    ChronometricReport,
    KernelFlags,
    PreferenceRelations,
    Tandem,
    TransitivityReport,
    ValueRepresentation,
    build_tandem_representation,
    build_value_representation,
    classify_kernel,
    complementary_log_odds,
    error_rates,
    induced_relations,
    is_chronometric,
    is_psychometric,
    is_transitive,
    log_odds,
    reconstruct_kernel,
)
from .models import (
    DdmParams,
    EmpiricalTandem,
    OuParams,
    TrialRecord,
    ddm_choice_probability,
    ddm_mean_time,
    ddm_sampler,
    ddm_status_quo,
    ddm_tandem,
    ddm_value_representation,
    dirac_kernel,
    empirical_tandem,
    identify_ddm,
    logit_kernel,
    ou_sampler,
    response_time_profile,
    sample_ddm_trial,
    sample_ddm_trials,
    sample_ou_trial,
    sample_ou_trials,
)
from .engine import (
    AlgorithmSpec,
    OutcomeReport,
    RunTrace,
    convergence_profile,
    deadline_limit_distribution,
    exact_outcome,
    inverse_time_exploration,
    limit_distribution,
    mean_iteration_durations,
    monte_carlo_outcome,
    negbin_generating_matrices,
    simulate_run,
    tandem_sampler,
    transition_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
