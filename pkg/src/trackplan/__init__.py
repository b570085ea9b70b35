"""Multi-sensor multi-target tracking simulator and fleet planners."""

from .estimation import (
    FleetBelief,
    NcvModel,
    TargetTrack,
    TrackAssociationError,
    fuse,
    initialize_track,
    ncv_model,
    predict,
    update,
)
from .metrics import OspaParams, TimingRecord, ecdf, ospa, trial_ospa_series
from .planning import (
    Action,
    BudgetExceededError,
    IntentSet,
    PlanStats,
    PolicySeq,
    RolloutResult,
    SearchConfig,
    action_set,
    dec_pomdp_plan,
    extend_intent,
    mcr_plan,
    mdo_position,
    mwtp,
    nominal_trajectory,
    optimize_single,
    propagate_agent,
    rollout_cost,
    sma_nbo_plan,
)
from .sensing import (
    AgentState,
    Observation,
    fov_region,
    in_fov,
    is_observable,
    observation_covariance,
    sense,
)
from .sim import PLANNERS, TrialLog, run_trial
from .worldgen import (
    Aoi,
    ForestPlacementError,
    MapFormatError,
    OcclusionForest,
    ScenarioConfig,
    TargetTrajectory,
    generate_forest,
    generate_levy_trajectory,
    load_map,
    save_map,
)

__all__ = [
    "Action",
    "AgentState",
    "Aoi",
    "BudgetExceededError",
    "FleetBelief",
    "ForestPlacementError",
    "IntentSet",
    "MapFormatError",
    "NcvModel",
    "Observation",
    "OcclusionForest",
    "OspaParams",
    "PLANNERS",
    "PlanStats",
    "PolicySeq",
    "RolloutResult",
    "ScenarioConfig",
    "SearchConfig",
    "TargetTrack",
    "TargetTrajectory",
    "TimingRecord",
    "TrackAssociationError",
    "TrialLog",
    "action_set",
    "dec_pomdp_plan",
    "ecdf",
    "extend_intent",
    "fov_region",
    "fuse",
    "generate_forest",
    "generate_levy_trajectory",
    "in_fov",
    "initialize_track",
    "is_observable",
    "load_map",
    "mcr_plan",
    "mdo_position",
    "mwtp",
    "ncv_model",
    "nominal_trajectory",
    "observation_covariance",
    "optimize_single",
    "ospa",
    "predict",
    "propagate_agent",
    "rollout_cost",
    "run_trial",
    "save_map",
    "sense",
    "sma_nbo_plan",
    "trial_ospa_series",
    "update",
]
