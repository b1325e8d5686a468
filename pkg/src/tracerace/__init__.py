"""tracerace: simulator and experiment harness for the contact-tracing race on trees."""

from ._rng import Xoshiro256, derive_seed
from .contagion import (
    InfectionTree,
    Instance,
    Node,
    NodeParams,
    ParamDistribution,
    PointMass,
    UniformMin,
    grow_uninhibited,
    infection_round,
    init_tree,
    sample_params,
)
from .engine import (
    BatchSummary,
    TraceRecord,
    TrialConfig,
    TrialOutcome,
    TrialState,
    observed_containment,
    resolve_workers,
    run_batch,
    run_trial,
)
from .policies import (
    BuiltinPolicy,
    Frontier,
    FrontierEntry,
    LearnedPolicy,
    PolicyKind,
    QueryResult,
    parse_policy,
    query,
    select,
)

__version__ = "0.1.0"

__all__ = [
    "BatchSummary",
    "BuiltinPolicy",
    "Frontier",
    "FrontierEntry",
    "InfectionTree",
    "Instance",
    "LearnedPolicy",
    "Node",
    "NodeParams",
    "ParamDistribution",
    "PointMass",
    "PolicyKind",
    "QueryResult",
    "TraceRecord",
    "TrialConfig",
    "TrialOutcome",
    "TrialState",
    "UniformMin",
    "Xoshiro256",
    "derive_seed",
    "grow_uninhibited",
    "infection_round",
    "init_tree",
    "observed_containment",
    "parse_policy",
    "query",
    "resolve_workers",
    "run_batch",
    "run_trial",
    "sample_params",
    "select",
    "__version__",
]
