"""Reset/step environment bridge over the orbitsim core.

An :class:`EnvHandle` owns one episode stream: :func:`env_reset` builds a
fresh scenario and returns per-agent observations, :func:`env_step`
advances the world and returns (observations, rewards, done, info).  All
simulation state lives in the core; the bridge only validates inputs,
shuttles observations across the boundary in the documented interchange
form (local observation plus the serialized graph: node ids, feature
rows, edge-index rows) and keeps the per-agent reward totals needed to
assemble episode metrics.

Random streams are derived exactly as the native harness derives them,
so a scripted policy driven through the bridge reproduces the native
episode bit for bit.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Union

import numpy as np

from orbitsim import (
    EpisodeMetrics,
    Policy,
    SweepResult,
    World,
    WorldConfig,
    build_all_graphs,
    episode_rngs,
    generate_scenario,
    local_observation,
    metrics_from_world,
    run_goal_sharing_sweep,
    run_inclination_sweep,
    run_scalability,
    serialize_graph,
)
from orbitsim.obsgraph import LocalObservation

BRIDGE_ABI_VERSION = 1

PROTOCOLS = ("scalability", "inclination", "goal-sharing")


class BridgeError(RuntimeError):
    """Invalid use of the bridge API."""


class ClosedHandleError(BridgeError):
    """Operation on a handle that has been closed."""


Observation = tuple[LocalObservation, dict]


class EnvHandle:
    """Opaque handle: one configured environment, one episode stream."""

    def __init__(self, config: WorldConfig):
        config.validate()
        self._config = config
        self._world: Optional[World] = None
        self._policy_rngs: Optional[list[np.random.Generator]] = None
        self._reward_totals: Optional[np.ndarray] = None
        self._closed = False

    # Internal accessors keep the handle opaque to callers.

    def _require_open(self) -> None:
        if self._closed:
            raise ClosedHandleError("handle is closed")

    def _require_world(self) -> World:
        self._require_open()
        if self._world is None:
            raise BridgeError("env_reset must be called before stepping")
        return self._world

    @property
    def abi_version(self) -> int:
        return BRIDGE_ABI_VERSION

    @property
    def n_agents(self) -> int:
        return self._config.n_agents

    def policy_streams(self) -> list[np.random.Generator]:
        """Per-agent random streams, identical to the native harness ones."""
        self._require_world()
        return self._policy_rngs


def open_env(config: Optional[WorldConfig] = None) -> EnvHandle:
    """Create a handle for the given (or default) world configuration."""
    return EnvHandle(config if config is not None else WorldConfig())


def env_close(handle: EnvHandle) -> None:
    handle._closed = True
    handle._world = None


def _observations(handle: EnvHandle) -> list[Observation]:
    world = handle._world
    graphs = build_all_graphs(world)
    return [
        (local_observation(world, i), serialize_graph(graphs[i]))
        for i in range(world.n_agents)
    ]


def env_reset(handle: EnvHandle, seed: int) -> list[Observation]:
    """Start a fresh episode; returns one (local observation, serialized
    graph) pair per agent for the initial state."""
    handle._require_open()
    scenario_ss, _reset_rng, policy_rngs = episode_rngs(seed, handle._config.n_agents)
    handle._world = generate_scenario(handle._config, scenario_ss)
    handle._policy_rngs = policy_rngs
    handle._reward_totals = np.zeros(handle._config.n_agents)
    return _observations(handle)


def _validate_actions(handle: EnvHandle, actions: Sequence) -> list:
    cfg = handle._config
    if len(actions) != cfg.n_agents:
        raise BridgeError(
            f"expected {cfg.n_agents} actions, got {len(actions)}"
        )
    checked = []
    if cfg.action_mode == "discrete5":
        for a in actions:
            idx = int(a)
            if not 0 <= idx <= 4:
                raise BridgeError(f"discrete action out of range: {a!r}")
            checked.append(idx)
    else:
        for a in actions:
            f = np.asarray(a, dtype=np.float64)
            if f.shape != (2,):
                raise BridgeError(f"continuous action must be a 2-vector, got shape {f.shape}")
            if not np.isfinite(f).all():
                raise BridgeError("continuous action must be finite")
            if np.hypot(f[0], f[1]) > cfg.action_force_magnitude * (1.0 + 1e-12):
                raise BridgeError(
                    f"action norm {np.hypot(f[0], f[1])!r} exceeds the "
                    f"{cfg.action_force_magnitude} N budget"
                )
            checked.append(f)
    return checked


def env_step(handle: EnvHandle, actions: Sequence):
    """Advance one step.  Returns (observations, rewards, done, info) with
    info carrying per-agent collision onsets and at-goal flags; rewards
    are exactly the core's per-step rewards."""
    world = handle._require_world()
    checked = _validate_actions(handle, actions)
    if world.step_index >= handle._config.max_steps:
        raise BridgeError("episode finished; call env_reset for a new stream")
    outcome = world.step(checked)
    handle._reward_totals += outcome.rewards
    info = {
        "collisions": outcome.collisions.tolist(),
        "at_goal": outcome.at_goal.tolist(),
    }
    return _observations(handle), outcome.rewards.tolist(), outcome.done, info


def episode_metrics(handle: EnvHandle) -> EpisodeMetrics:
    """Metrics for the episode streamed so far (single source of truth:
    assembled by the core from the wrapped world)."""
    world = handle._require_world()
    return metrics_from_world(world, handle._reward_totals.copy())


class CallbackPolicy(Policy):
    """Adapter turning an external callback into a core policy.

    The callback receives (local observation, serialized graph, random
    stream) and must return an in-range action.
    """

    def __init__(self, callback: Callable, config: WorldConfig):
        self._callback = callback
        self._config = config

    def act(self, obs, graph, rng=None):
        return self._callback(obs, serialize_graph(graph), rng)


def run_protocol(
    name: str,
    policy_callback: Union[Callable, Policy],
    config: Optional[WorldConfig] = None,
    **kwargs,
) -> SweepResult:
    """Run one of the harness experiment protocols with an external policy.

    ``name`` is one of scalability, inclination, goal-sharing; extra
    keyword arguments pass through to the harness sweep.  The callback
    sees observations in the bridge interchange layout.
    """
    config = config if config is not None else WorldConfig()
    if isinstance(policy_callback, Policy):
        policy: Policy = policy_callback
    else:
        policy = CallbackPolicy(policy_callback, config)
    if name == "scalability":
        return run_scalability(config, policy=policy, **kwargs)
    if name == "inclination":
        return run_inclination_sweep(config, policy=policy, **kwargs)
    if name == "goal-sharing":
        return run_goal_sharing_sweep(config, policy=policy, **kwargs)
    raise BridgeError(f"unknown protocol {name!r}; choose from {PROTOCOLS}")
