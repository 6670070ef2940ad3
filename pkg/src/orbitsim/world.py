"""Simulation world: entities, stepping, rewards and collision accounting.

A :class:`World` owns the mutable episode state.  Entities are stored
in flat arrays (agents first, then goals, then obstacles) so the hot
per-step physics can run in the selected kernel implementation; the
:class:`Entity` view is materialized on demand.

Conventions:

* obstacles and goals never move (goals only via :meth:`World.reset_goal`);
* goals are non-physical: no contact force, no collision events;
* overlap means center distance strictly below the radius sum;
* a collision *event* is an overlap onset (non-overlap -> overlap
  transition of a pair), credited to each involved agent, while the
  per-step collision reward penalizes any overlap on that step;
* reaching the goal (distance below the reach threshold) is latched
  for the time-to-goal metric even though the dynamics continue.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from orbitsim import _kernels
from orbitsim._kernels import KIND_AGENT, KIND_GOAL, KIND_OBSTACLE
from orbitsim.dynamics import (
    CwParams,
    GroundParams,
    J2Params,
    State2D,
    mean_motion,
    EARTH_MU_KM3_S2,
    EARTH_RADIUS_KM,
    J2_EARTH,
    DEFAULT_ORBIT_RADIUS_KM,
    MAGIC_INCLINATION_RAD,
)

logger = logging.getLogger(__name__)

REGIMES = ("ground", "cw", "cw_j2")
ACTION_MODES = ("discrete5", "continuous")

#: Discrete action set: index -> unit force direction.
DISCRETE_ACTIONS = np.array(
    [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
)

AgentAction = Union[int, np.ndarray]


class EntityKind(IntEnum):
    AGENT = KIND_AGENT
    OBSTACLE = KIND_OBSTACLE
    GOAL = KIND_GOAL


@dataclass
class Entity:
    """Read-only view of one entity (id, kind, state, geometry)."""

    id: int
    kind: EntityKind
    state: State2D
    radius: float
    mass: Optional[float] = None
    goal_id: Optional[int] = None


class PlacementError(RuntimeError):
    """Scenario generation could not place all entities without overlap."""


class SimulationError(RuntimeError):
    """Fatal mid-episode failure (non-finite state, bad step usage)."""


@dataclass(frozen=True)
class WorldConfig:
    """Full environment parameterization.

    Defaults describe the space environment: a 2 km x 2 km area,
    100 steps of 36 s (about one hour), 1 N control authority on
    100 kg satellites.  Use :meth:`ground` for the ground preset.
    """

    dynamics_regime: str = "cw"
    env_half_width: float = 1.0
    n_agents: int = 3
    n_obstacles: int = 3
    sensing_radius: float = 1.0
    dt: float = 36.0
    max_steps: int = 100
    action_mode: str = "discrete5"
    action_force_magnitude: float = 1.0
    goal_reach_threshold: float = 0.05
    agent_radius: float = 0.025
    obstacle_radius: float = 0.025
    contact_force_gain: float = 100.0
    contact_margin: float = 1.0e-3
    collision_reward: float = -5.0
    goal_reward: float = 5.0
    goal_sharing: bool = True
    agent_mass: float = 100.0
    damping: float = 0.25
    omega_n: Optional[float] = None
    orbit_radius_km: float = DEFAULT_ORBIT_RADIUS_KM
    mu_km3_s2: float = EARTH_MU_KM3_S2
    inclination_rad: float = MAGIC_INCLINATION_RAD
    j2_coeff: float = J2_EARTH
    earth_radius_km: float = EARTH_RADIUS_KM
    seed: int = 0

    @classmethod
    def ground(cls, **overrides) -> "WorldConfig":
        """Ground preset: meter scale, dt 0.1 s, 25-step episodes."""
        base = dict(
            dynamics_regime="ground",
            dt=0.1,
            max_steps=25,
            agent_mass=1.0,
            damping=0.25,
        )
        base.update(overrides)
        return cls(**base)

    def validate(self) -> None:
        if self.dynamics_regime not in REGIMES:
            raise ValueError(
                f"dynamics_regime must be one of {REGIMES}, got {self.dynamics_regime!r}"
            )
        if self.action_mode not in ACTION_MODES:
            raise ValueError(
                f"action_mode must be one of {ACTION_MODES}, got {self.action_mode!r}"
            )
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.n_obstacles < 0:
            raise ValueError(f"n_obstacles must be >= 0, got {self.n_obstacles}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.sensing_radius > 0.0:
            raise ValueError(f"sensing_radius must be > 0, got {self.sensing_radius}")
        for name in (
            "env_half_width",
            "goal_reach_threshold",
            "agent_radius",
            "obstacle_radius",
            "contact_margin",
            "action_force_magnitude",
            "agent_mass",
        ):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.contact_force_gain < 0.0:
            raise ValueError(
                f"contact_force_gain must be >= 0, got {self.contact_force_gain}"
            )
        if self.damping < 0.0:
            raise ValueError(f"damping must be >= 0, got {self.damping}")
        if not self.orbit_radius_km > self.earth_radius_km > 0.0:
            raise ValueError(
                "require orbit_radius_km > earth_radius_km > 0, got "
                f"orbit_radius_km={self.orbit_radius_km}, "
                f"earth_radius_km={self.earth_radius_km}"
            )
        # Construct the params object so derived values (omega, c) are checked too.
        self.dynamics_params()

    def resolved_omega_n(self) -> float:
        if self.omega_n is not None:
            return self.omega_n
        return mean_motion(self.orbit_radius_km, self.mu_km3_s2)

    def dynamics_params(self) -> GroundParams | CwParams | J2Params:
        if self.dynamics_regime == "ground":
            return GroundParams(mass=self.agent_mass, gamma=self.damping)
        if self.dynamics_regime == "cw":
            return CwParams(omega_n=self.resolved_omega_n(), mass=self.agent_mass)
        return J2Params(
            omega_n=self.resolved_omega_n(),
            mass=self.agent_mass,
            inclination_rad=self.inclination_rad,
            j2=self.j2_coeff,
            earth_radius_km=self.earth_radius_km,
            orbit_radius_km=self.orbit_radius_km,
        )

    def kernel_args(self) -> tuple[int, float, float, float]:
        """(regime code, mass, p1, p2) for the step kernels."""
        params = self.dynamics_params()
        if isinstance(params, GroundParams):
            return _kernels.REGIME_GROUND, params.mass, params.gamma, 0.0
        if isinstance(params, CwParams):
            return _kernels.REGIME_CW, params.mass, params.omega_n, 0.0
        return _kernels.REGIME_J2, params.mass, params.omega_n, params.c


@dataclass
class StepOutcome:
    """Per-step results: rewards, collision onsets, goal proximity, done."""

    rewards: np.ndarray
    collisions: np.ndarray
    at_goal: np.ndarray
    done: bool


class World:
    """Mutable simulation state for one episode.

    Entity ids are array indices: agents occupy ``[0, m)``, goals
    ``[m, 2m)`` (agent i owns goal m + i), obstacles ``[2m, 2m + k)``.
    """

    def __init__(
        self,
        config: WorldConfig,
        agent_positions: np.ndarray,
        goal_positions: np.ndarray,
        obstacle_positions: np.ndarray,
        agent_velocities: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        config.validate()
        self.config = config
        m = config.n_agents
        k = config.n_obstacles
        agent_positions = np.asarray(agent_positions, dtype=np.float64).reshape(m, 2)
        goal_positions = np.asarray(goal_positions, dtype=np.float64).reshape(m, 2)
        obstacle_positions = np.asarray(obstacle_positions, dtype=np.float64).reshape(k, 2)

        n = 2 * m + k
        self.n_agents = m
        self.n_entities = n
        self.positions = np.vstack([agent_positions, goal_positions, obstacle_positions])
        self.velocities = np.zeros((n, 2))
        if agent_velocities is not None:
            self.velocities[:m] = np.asarray(agent_velocities, dtype=np.float64).reshape(m, 2)
        self.radii = np.concatenate(
            [
                np.full(m, config.agent_radius),
                np.full(m, config.goal_reach_threshold),
                np.full(k, config.obstacle_radius),
            ]
        )
        self.kinds = np.concatenate(
            [
                np.full(m, KIND_AGENT, dtype=np.uint8),
                np.full(m, KIND_GOAL, dtype=np.uint8),
                np.full(k, KIND_OBSTACLE, dtype=np.uint8),
            ]
        )
        self._initial_obstacle_positions = obstacle_positions.copy()

        self.step_index = 0
        self.reached_goal = np.zeros(m, dtype=bool)
        self.first_reach_step = np.full(m, -1, dtype=np.int64)
        self.collision_pair_events = 0
        self.agent_collision_counts = np.zeros(m, dtype=np.int64)
        self.per_step_overlap_counts: list[int] = []
        self.connectivity_log: list[np.ndarray] = []
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.trajectory_sink: Optional[Callable[[dict], None]] = None

        self._overlap = np.zeros((n, n), dtype=np.uint8)
        self._connect = np.zeros(m, dtype=np.uint8)
        self.prev_overlap = self._compute_overlap()
        self._kernel_args = config.kernel_args()

    # -- entity access ---------------------------------------------------

    def goal_id(self, agent_id: int) -> int:
        return self.n_agents + agent_id

    def entity(self, entity_id: int) -> Entity:
        kind = EntityKind(int(self.kinds[entity_id]))
        return Entity(
            id=entity_id,
            kind=kind,
            state=State2D(self.positions[entity_id].copy(), self.velocities[entity_id].copy()),
            radius=float(self.radii[entity_id]),
            mass=self.config.agent_mass if kind == EntityKind.AGENT else None,
            goal_id=self.goal_id(entity_id) if kind == EntityKind.AGENT else None,
        )

    @property
    def entities(self) -> list[Entity]:
        return [self.entity(i) for i in range(self.n_entities)]

    def goal_distances(self) -> np.ndarray:
        m = self.n_agents
        delta = self.positions[:m] - self.positions[m : 2 * m]
        return np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)

    # -- helpers ----------------------------------------------------------

    def _compute_overlap(self) -> np.ndarray:
        out = np.zeros((self.n_entities, self.n_entities), dtype=np.uint8)
        phys = self.kinds != KIND_GOAL
        agent = self.kinds == KIND_AGENT
        for i in range(self.n_entities):
            if not phys[i]:
                continue
            for j in range(i + 1, self.n_entities):
                if not phys[j] or not (agent[i] or agent[j]):
                    continue
                delta = self.positions[i] - self.positions[j]
                if float(np.hypot(delta[0], delta[1])) < self.radii[i] + self.radii[j]:
                    out[i, j] = out[j, i] = 1
        return out

    def actions_to_forces(self, actions: Sequence[AgentAction]) -> np.ndarray:
        m = self.n_agents
        if len(actions) != m:
            raise SimulationError(
                f"expected {m} actions, got {len(actions)} (step {self.step_index})"
            )
        fmax = self.config.action_force_magnitude
        forces = np.zeros((m, 2))
        if self.config.action_mode == "discrete5":
            for i, a in enumerate(actions):
                idx = int(a)
                if not 0 <= idx < len(DISCRETE_ACTIONS):
                    raise SimulationError(f"discrete action out of range: {a!r}")
                forces[i] = DISCRETE_ACTIONS[idx] * fmax
        else:
            for i, a in enumerate(actions):
                f = np.asarray(a, dtype=np.float64).reshape(2)
                norm = float(np.hypot(f[0], f[1]))
                if norm > fmax:
                    f = f * (fmax / norm)
                forces[i] = f
        return forces

    # -- core operations ---------------------------------------------------

    def step(self, actions: Sequence[AgentAction]) -> StepOutcome:
        """Advance one step: forces, integration, collisions, rewards."""
        cfg = self.config
        if self.step_index >= cfg.max_steps:
            raise SimulationError(f"episode already finished at step {self.step_index}")
        forces = self.actions_to_forces(actions)

        self._overlap.fill(0)
        regime, mass, p1, p2 = self._kernel_args
        n_degenerate = _kernels.active.step_world(
            self.positions,
            self.velocities,
            forces,
            self.radii,
            self.kinds,
            self.n_agents,
            regime,
            mass,
            p1,
            p2,
            cfg.contact_force_gain,
            cfg.contact_margin,
            cfg.env_half_width,
            cfg.dt,
            cfg.sensing_radius,
            self._overlap,
            self._connect,
        )
        if n_degenerate:
            logger.warning(
                "step %d: %d coincident contact pair(s), using +x fallback direction",
                self.step_index,
                n_degenerate,
            )

        m = self.n_agents
        if not np.isfinite(self.positions[:m]).all() or not np.isfinite(self.velocities[:m]).all():
            raise SimulationError(f"non-finite agent state after step {self.step_index}")

        self.connectivity_log.append(self._connect.copy())

        # Collision onsets: pairs overlapping now that were not before.
        onset = (self._overlap == 1) & (self.prev_overlap == 0)
        step_collisions = np.zeros(m, dtype=np.int64)
        pair_count = 0
        ii, jj = np.nonzero(onset)
        for i, j in zip(ii.tolist(), jj.tolist()):
            if i >= j:
                continue
            pair_count += 1
            if i < m:
                step_collisions[i] += 1
            if j < m:
                step_collisions[j] += 1
        self.collision_pair_events += pair_count
        self.agent_collision_counts += step_collisions
        self.per_step_overlap_counts.append(int(np.count_nonzero(np.triu(self._overlap, 1))))
        self.prev_overlap = self._overlap.copy()

        # Rewards and goal latching.
        gdist = self.goal_distances()
        at_goal = gdist < cfg.goal_reach_threshold
        overlapping = self._overlap[:m].any(axis=1)
        rewards = np.empty(m)
        for i in range(m):
            r = -float(gdist[i])
            if overlapping[i]:
                r = r + cfg.collision_reward
            if at_goal[i]:
                r = r + cfg.goal_reward
            rewards[i] = r

        self.step_index += 1
        newly = at_goal & ~self.reached_goal
        self.first_reach_step[newly] = self.step_index
        self.reached_goal |= at_goal

        if self.trajectory_sink is not None:
            self._emit_trajectory(rewards, overlapping)

        return StepOutcome(
            rewards=rewards,
            collisions=step_collisions,
            at_goal=at_goal,
            done=self.step_index >= cfg.max_steps,
        )

    def reward(self, agent_id: int) -> float:
        """Recompute one agent's current-step reward from the world state."""
        m = self.n_agents
        if not 0 <= agent_id < m:
            raise KeyError(f"unknown agent id {agent_id}")
        gdist = float(self.goal_distances()[agent_id])
        r = -gdist
        if self.prev_overlap[agent_id].any():
            r = r + self.config.collision_reward
        if gdist < self.config.goal_reach_threshold:
            r = r + self.config.goal_reward
        return r

    def joint_reward(self) -> float:
        return float(sum(self.reward(i) for i in range(self.n_agents)))

    def collision_count(self) -> int:
        """Total pair-onset collision events so far."""
        return self.collision_pair_events

    def reset_goal(
        self,
        agent_id: int,
        rho_max: float,
        stream: Optional[np.random.Generator] = None,
    ) -> None:
        """Move an agent's goal uniformly within a disk of radius rho_max.

        The sample is area-uniform (radius rho_max * sqrt(u)), the new
        position is clamped to the environment square, and the agent's
        reached-goal latch is cleared so the time-to-goal clock restarts.
        """
        if not 0 <= agent_id < self.n_agents:
            raise KeyError(f"unknown agent id {agent_id}")
        if rho_max < 0.0:
            raise ValueError(f"rho_max must be >= 0, got {rho_max}")
        stream = stream if stream is not None else self.rng
        u = stream.random(2)
        radius = rho_max * np.sqrt(u[0])
        angle = 2.0 * np.pi * u[1]
        gid = self.goal_id(agent_id)
        hw = self.config.env_half_width
        new = self.positions[gid] + np.array(
            [radius * np.cos(angle), radius * np.sin(angle)]
        )
        self.positions[gid] = np.clip(new, -hw, hw)
        self.reached_goal[agent_id] = False
        self.first_reach_step[agent_id] = -1

    def teleport_agent_to_goal(self, agent_id: int) -> None:
        """Place an agent on its goal at rest (stub-policy test scaffolding)."""
        if not 0 <= agent_id < self.n_agents:
            raise KeyError(f"unknown agent id {agent_id}")
        self.positions[agent_id] = self.positions[self.goal_id(agent_id)].copy()
        self.velocities[agent_id] = 0.0

    # -- trajectory emission ------------------------------------------------

    def emit_initial_records(self) -> None:
        if self.trajectory_sink is not None:
            zeros = np.zeros(self.n_agents)
            self._emit_trajectory(zeros, np.zeros(self.n_agents, dtype=bool), step=0)

    def _emit_trajectory(self, rewards, overlapping, step: Optional[int] = None) -> None:
        step = self.step_index if step is None else step
        for eid in range(self.n_entities):
            is_agent = eid < self.n_agents
            self.trajectory_sink(
                {
                    "step": step,
                    "id": eid,
                    "kind": EntityKind(int(self.kinds[eid])).name.lower(),
                    "x": float(self.positions[eid, 0]),
                    "y": float(self.positions[eid, 1]),
                    "vx": float(self.velocities[eid, 0]),
                    "vy": float(self.velocities[eid, 1]),
                    "reward": float(rewards[eid]) if is_agent else 0.0,
                    "collided": bool(overlapping[eid]) if is_agent else False,
                }
            )

    def check_obstacles_static(self) -> bool:
        start = 2 * self.n_agents
        return bool(
            np.array_equal(self.positions[start:], self._initial_obstacle_positions)
        )


def contact_force(
    p_i: np.ndarray,
    p_j: np.ndarray,
    r_i: float,
    r_j: float,
    gain: float,
    margin: float,
) -> np.ndarray:
    """Soft penetration force on entity i from entity j (newtons).

    Magnitude ``gain * margin * softplus((r_i + r_j - |dp|) / margin)``
    along the direction from j toward i; smooth in the separation.
    Coincident centers fall back to the +x direction (logged).
    """
    dx = float(p_i[0]) - float(p_j[0])
    dy = float(p_i[1]) - float(p_j[1])
    dist = float(np.hypot(dx, dy))
    mag = _kernels.active.contact_force_magnitude(dist, r_i + r_j, gain, margin)
    if dist == 0.0:
        logger.warning("coincident contact pair, using +x fallback direction")
        return np.array([mag, 0.0])
    return np.array([mag * dx / dist, mag * dy / dist])


def generate_scenario(
    config: WorldConfig,
    seed: Union[int, np.random.SeedSequence, None] = None,
) -> World:
    """Place agents, goals and obstacles uniformly at random, without overlap.

    Placement is rejection-sampled so every pair of entities starts with
    center distance above the sum of their radii plus the contact margin;
    agents start at rest.  Deterministic given (config, seed).
    """
    config.validate()
    if seed is None:
        seed = config.seed
    rng = np.random.default_rng(seed)

    m, k = config.n_agents, config.n_obstacles
    radii = (
        [config.agent_radius] * m
        + [config.goal_reach_threshold] * m
        + [config.obstacle_radius] * k
    )
    hw = config.env_half_width
    margin = config.contact_margin
    placed: list[np.ndarray] = []
    max_attempts = 200

    for idx, radius in enumerate(radii):
        limit = hw - radius
        if limit <= 0.0:
            raise PlacementError(
                f"entity radius {radius} does not fit in half-width {hw}"
            )
        for attempt in range(max_attempts):
            pos = rng.uniform(-limit, limit, 2)
            ok = True
            for other, r_other in zip(placed, radii):
                if np.hypot(*(pos - other)) <= radius + r_other + margin:
                    ok = False
                    break
            if ok:
                placed.append(pos)
                break
        else:
            area = (2.0 * hw) ** 2
            occupied = sum(np.pi * r * r for r in radii)
            raise PlacementError(
                f"failed to place entity {idx + 1}/{len(radii)} after "
                f"{max_attempts} attempts: {len(radii)} entities with "
                f"total footprint {occupied:.4g} in area {area:.4g} "
                f"(fill fraction {occupied / area:.3f})"
            )

    positions = np.array(placed)
    return World(
        config,
        agent_positions=positions[:m],
        goal_positions=positions[m : 2 * m],
        obstacle_positions=positions[2 * m :],
        rng=rng,
    )
