"""Dictionary-based compressed sensing toolkit.

Decoders (l1-synthesis, l1-analysis, basis pursuit, exhaustive minimal
support), exact certification of null-space recovery conditions, closed-form
stability bounds, and a seeded simulation harness with CSV reports.
"""

from . import matcore
from .errors import (
    CombinatorialBudgetExceeded,
    DegenerateColumn,
    DegenerateSignal,
    ExactModeUnavailable,
    FramecsError,
    InconsistentRepresentation,
    InvalidInput,
    NoPositiveSingularValue,
    NoSolution,
    NotFullSpark,
    PremiseFailed,
)
from .experiments import (
    DemoRecord,
    ExperimentConfig,
    ReportTable,
    format_report,
    read_config,
    read_report,
    run_inadmissibility_demo,
    run_recovery_experiment,
    write_report,
)
from .frames import (
    SPARK_INFINITE,
    Frame,
    FrameStats,
    build_coherent_frame,
    build_dct,
    build_spiked_identity,
    canonical_dual,
    coherence,
    frame_bounds,
    frame_stats,
    gaussian_matrix,
    is_full_spark,
    spark,
)
from .nspcert import (
    DictNspVerdict,
    NspCertificate,
    certify_dict_nsp_full_spark,
    coherence_bound_check,
    falsify_dict_nsp,
    injectivity_check,
    kernel_l1_min,
    kernel_sign_condition,
    nsp_check,
)
from .solvers import (
    SolverOptions,
    SolverReport,
    SynthesisResult,
    basis_pursuit,
    bpdn,
    l0_oracle,
    l1_analysis,
    l1_synthesis,
    sparse_dual,
)
from .stability import (
    BoundInputs,
    best_s_term_residual,
    coefficient_recovery_bound,
    noisy_recovery_bound,
    operator_norm_1_2,
    perturbed_dictionary_bound,
    stability_constant_estimate,
    verbose_bound_report,
)

__version__ = "0.1.0"
