"""Generalized-landmark planning toolkit.

The pipeline: parse and ground typed STRIPS tasks (`pddl`), execute plans
into goal-annotated trajectories (`trajectory`), generate description-logic
count features over their states (`features`), prune and valuate them into
state-function tables (`statefns`), discover a landmark graph with chains
and loops (`discovery`), and plan with the path-dependent landmark-counting
heuristic (`search`).  `delivery` bundles the grid-delivery benchmark
domain used throughout the test suite, and `cli` exposes everything as the
``loopmark`` command.
"""

from ._kernels import BACKEND_NAME, available_backends
from .discovery import (
    Landmark,
    LandmarkGraph,
    LoopEdge,
    SatisfiesTrace,
    brute_force_discover,
    discover_graph,
    discover_loop,
    discover_next_landmark,
    graph_from_json,
    load_graph,
    satisfies,
    satisfies_trace,
)
from .errors import (
    CounterDisagreementError,
    DiscoveryFailedError,
    EmptyPoolError,
    FingerprintMismatchError,
    GoalNotReachedError,
    GraphInapplicableError,
    GroundingLimitError,
    LoopmarkError,
    PddlSyntaxError,
    PlanExecutionError,
    PreprocessingError,
    ResourceLimitError,
    SchemaError,
    TypeCycleError,
    UnsupportedGoalError,
    UnsupportedRequirementError,
    ValidationError,
)
from .features import (
    BETA_PRESETS,
    BetaConfig,
    FeaturePool,
    ModelState,
    generate_features,
    model_states_from_trajectories,
    parse_feature,
)
from .pddl import (
    DomainDef,
    GroundAction,
    GroundTask,
    ProblemDef,
    ground,
    parse_domain,
    parse_problem,
)
from .search import (
    CombinedHeuristic,
    GoalCountHeuristic,
    LMGHeuristic,
    RelaxationHeuristic,
    SearchStats,
    make_helper,
    plan,
)
from .statefns import (
    PHI_PRESETS,
    FunctionTable,
    derive_table,
    preprocess,
    preprocess_pool,
)
from .trajectory import (
    Trajectory,
    TrajectorySet,
    annotate_and_ground,
    annotate_task,
    domain_fingerprint,
    execute_plan,
    load_trajectory_set,
    parse_plan,
    trajectory_set_from_json,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "BETA_PRESETS",
    "BetaConfig",
    "CombinedHeuristic",
    "CounterDisagreementError",
    "DiscoveryFailedError",
    "DomainDef",
    "EmptyPoolError",
    "FeaturePool",
    "FingerprintMismatchError",
    "FunctionTable",
    "GoalCountHeuristic",
    "GoalNotReachedError",
    "GraphInapplicableError",
    "GroundAction",
    "GroundTask",
    "GroundingLimitError",
    "LMGHeuristic",
    "Landmark",
    "LandmarkGraph",
    "LoopEdge",
    "LoopmarkError",
    "ModelState",
    "PHI_PRESETS",
    "PddlSyntaxError",
    "PlanExecutionError",
    "PreprocessingError",
    "ProblemDef",
    "RelaxationHeuristic",
    "ResourceLimitError",
    "SatisfiesTrace",
    "SchemaError",
    "SearchStats",
    "Trajectory",
    "TrajectorySet",
    "TypeCycleError",
    "UnsupportedGoalError",
    "UnsupportedRequirementError",
    "ValidationError",
    "annotate_and_ground",
    "annotate_task",
    "available_backends",
    "brute_force_discover",
    "derive_table",
    "discover_graph",
    "discover_loop",
    "discover_next_landmark",
    "domain_fingerprint",
    "execute_plan",
    "generate_features",
    "graph_from_json",
    "ground",
    "load_graph",
    "load_trajectory_set",
    "make_helper",
    "model_states_from_trajectories",
    "parse_domain",
    "parse_feature",
    "parse_plan",
    "parse_problem",
    "plan",
    "preprocess",
    "preprocess_pool",
    "satisfies",
    "satisfies_trace",
    "trajectory_set_from_json",
]
