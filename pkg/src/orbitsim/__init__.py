"""Deterministic multi-agent space-traffic simulation core and experiment harness."""

__version__ = "0.1.0"

from orbitsim._kernels import implementation_name
from orbitsim.dynamics import (
    CwParams,
    GroundParams,
    J2Params,
    State2D,
    StateZ,
    c_param,
    cw_accel,
    cw_closed_form,
    ground_accel,
    ground_closed_form,
    j2_accel,
    rk4_step,
    z_accel,
)
from orbitsim.world import (
    Entity,
    EntityKind,
    PlacementError,
    SimulationError,
    StepOutcome,
    World,
    WorldConfig,
    contact_force,
    generate_scenario,
)
from orbitsim.obsgraph import (
    LocalObservation,
    NodeFeature,
    ObservationGraph,
    build_all_graphs,
    build_graph,
    connectivity_fraction,
    deserialize_graph,
    local_observation,
    serialize_graph,
)
from orbitsim.policy import Policy, make_policy
from orbitsim.harness import (
    EpisodeMetrics,
    SweepResult,
    aggregate,
    episode_rngs,
    episode_seed,
    metrics_from_world,
    moving_average,
    run_episode,
    run_goal_sharing_sweep,
    run_inclination_sweep,
    run_scalability,
)
from orbitsim.config import ConfigError, ExperimentSpec, load_config

__all__ = [
    "__version__",
    "implementation_name",
    "State2D",
    "StateZ",
    "GroundParams",
    "CwParams",
    "J2Params",
    "ground_accel",
    "cw_accel",
    "j2_accel",
    "z_accel",
    "c_param",
    "rk4_step",
    "cw_closed_form",
    "ground_closed_form",
    "Entity",
    "EntityKind",
    "World",
    "WorldConfig",
    "StepOutcome",
    "PlacementError",
    "SimulationError",
    "contact_force",
    "generate_scenario",
    "NodeFeature",
    "LocalObservation",
    "ObservationGraph",
    "build_graph",
    "build_all_graphs",
    "local_observation",
    "connectivity_fraction",
    "serialize_graph",
    "deserialize_graph",
    "Policy",
    "make_policy",
    "EpisodeMetrics",
    "SweepResult",
    "run_episode",
    "run_scalability",
    "run_inclination_sweep",
    "run_goal_sharing_sweep",
    "moving_average",
    "aggregate",
    "episode_seed",
    "episode_rngs",
    "metrics_from_world",
    "ConfigError",
    "ExperimentSpec",
    "load_config",
]
