"""Real-time matching-queue simulator for liver allocation policies.

A discrete-time bipartite matching queue with impatience: patients wait for
organs, age through MELD severity bands, may receive a MELD exception, and
renege (die or drop out) when their patience runs out. Organs match on
arrival under a configurable policy -- EDF, ESDF, or an allocation SCORE --
and scenario runs compare policies across organ-shortage levels on
death/dropout (DDTS) and transplant (LTx) equity metrics.
"""

from .classes import (
    AWAITING_INDICATIONS,
    DONOR,
    ClassId,
    CompatibilityGraph,
    DonorClass,
    Indication,
    MeldBand,
    MXP_BANDS,
    RecipientClass,
    class_key,
    enumerate_classes,
    is_compatible,
    parse_class_key,
    recipient_classes,
)
from .config import (
    ConfigError,
    RunConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    parse_config,
    write_config,
)
from .engine import (
    FateLedger,
    FateRecord,
    PhaseTallies,
    SimState,
    SimulationModel,
    StepEvents,
    Streams,
    actualize,
    build_model,
    grant_mxp,
    incoming,
    maybe_remeld,
    run_phase,
    step,
)
from .items import Item, Queue
from .policies import (
    DEFAULT_SCORE,
    PolicyKind,
    ScoreFunction,
    choose_match,
    score,
)
from .scenarios import (
    Rates,
    ScenarioResult,
    ScenarioSpec,
    crude_rates,
    ddts_variance,
    run_matrix,
    run_scenarios,
)
from .survival import (
    CoxLaw,
    CoxModel,
    CoxStratum,
    EmpiricalLaw,
    MxpGrantModel,
    NO_PATIENCE,
    NoPatience,
    PatienceLaw,
    SurvivalModel,
    WeibullHazard,
    sample_conditional_shifted,
    sample_mxp_grant_time,
    sample_patience,
    sample_patience_conditioned_above,
)
from .transitions import TransitionGraph, build_transition_rates, meld_neighbors
from .output import emit_results, load_results

__version__ = "1.0.0"
