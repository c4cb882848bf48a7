"""Win-ratio analyses of composite endpoints and trial-design simulation."""

from .core import (
    Arm,
    BinaryOutcome,
    ConfigError,
    ContinuousOutcome,
    DegenerateResultError,
    MatchedPair,
    PairingResult,
    PatientRecord,
    SurvivalOutcome,
    WinStatus,
    all_cross_pairs,
    form_matched_pairs,
    stratify,
)
from .datagen import (
    BinaryGenConfig,
    ContinuousGenConfig,
    Subpop,
    SubpopMix,
    SurvivalGenConfig,
    cohort_to_csv,
    gen_binary_cohort,
    gen_continuous_cohort,
    gen_survival_cohort,
)
from .wr_tests import (
    BinaryRule,
    ContinuousRule,
    FsIntermediate,
    SurvivalRule,
    WrResult,
    fs_unmatched_test,
    improvement_indicators,
    matched_wr_test,
    win_binary,
    win_continuous,
    win_survival,
)
from .classic_tests import (
    CoxResult,
    ObrienResult,
    OrResult,
    contingency_or_test,
    cox_fit,
    obrien_test,
)
from .power import (
    ThetaBinary,
    WinProbs,
    matched_sample_size,
    matched_win_probs,
    unmatched_g,
    unmatched_sample_size,
    unmatched_variance,
)
from .harness import (
    McSummary,
    ScenarioConfig,
    monte_carlo,
    run_cr_trial,
    run_parallel_trial,
    run_sed_trial,
    scenario_from_dict,
)
from .presets import TABLE_IDS, reproduce_table

__version__ = "0.1.0"
