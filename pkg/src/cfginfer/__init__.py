"""Infer configuration interactions of a program from its coverage.

An interaction for a code location is the weakest formula over
configuration options under which the test suite reaches that location.
The package infers such formulas from a coverage oracle by iteratively
choosing which configurations to run next.
"""

from .config_space import (
    ConfigSpace,
    Configuration,
    OptionDomain,
    SettingSet,
    SpaceError,
    SpaceTooLarge,
    all_configurations,
    one_way_covering_array,
    pointwise_union,
)
from .evaluation import (
    EvalReport,
    MinCoverResult,
    convergence_trajectory,
    delta_cov,
    exhaustive_infer,
    f_score,
    histogram,
    min_cover,
    random_baseline,
)
from .inference import InferenceParams, InferenceResult, gen_new_configs, run
from .interaction import (
    TRUE,
    CandidateTuple,
    Conj,
    ConjDisj,
    Disj,
    DisjConj,
    FinalResult,
    check,
    equivalent,
    implies,
    infer_candidates,
    parse_interaction,
    parse_result,
    sel_strongest,
)
from .oracle import (
    CoverageCache,
    ExternalOracle,
    OracleError,
    RunnerSpec,
    SubjectSpec,
    SyntheticOracle,
    fig1_subject,
    load_subject,
    random_subject,
)

__version__ = "0.1.0"
