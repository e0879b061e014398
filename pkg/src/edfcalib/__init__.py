"""Calibration tests for mean estimates within the exponential dispersion family.

Classical tools (isotonic recalibration, CORP reliability diagrams, Murphy's
score decomposition, the bootstrap likelihood-ratio test) together with
universal-inference split tests whose e-value structure gives finite-sample
type I control at the critical value 1/alpha, plus a seeded Monte Carlo
harness for power studies.
"""

from .classical import (
    BootstrapNull,
    LrtResult,
    ReliabilityDiagram,
    bootstrap_null,
    log_lrs,
    lrt_test,
    reliability_diagram,
)
from .exceptions import (
    CalibrationError,
    ConfigError,
    DegenerateSplit,
    DomainError,
    EmptyInput,
    InsufficientData,
    NonpositiveWeight,
)
from .families import (
    FAMILY_NAMES,
    Binomial,
    EdfFamily,
    Gamma,
    InverseGaussian,
    Normal,
    Observation,
    Poisson,
    TestSample,
    get_family,
    log_e_factor,
)
from .isotonic import IsotonicFit, pav_fit, recalibrate
from .murphy import (
    MurphyDecomposition,
    decompose,
    log_lrs_from_mcb,
    mcb_from_log_lrs,
    score,
)
from .simulate import (
    CrossingStudy,
    RelationStudy,
    ScenarioConfig,
    StudyCell,
    StudyResult,
    TestOutcome,
    TestSpec,
    apply_miscalibration,
    crossing_histogram,
    generate_true_means,
    lrs_relation_study,
    power_study,
    run_trial,
)
from .universal import (
    DEFAULT_T_GRID,
    EvalueReport,
    PowerDiagnostics,
    SplitConfig,
    combine,
    conditional_e_power,
    conditional_power_factor,
    log_split_lrs,
    log_split_power_lrs,
    pi_star,
    power_diagnostics,
    split_once,
    subsampled_test,
    t_opt,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
