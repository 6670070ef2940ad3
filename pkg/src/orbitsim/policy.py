"""Scripted action-selection baselines.

These controllers stand in for learned policies so every experiment
protocol runs end to end.  All of them return actions inside the force
budget; the greedy one-step lookahead deliberately uses the true
environment dynamics (evaluation scaffolding, not a learned agent).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from orbitsim import _kernels
from orbitsim._kernels import KIND_AGENT, KIND_OBSTACLE
from orbitsim.obsgraph import LocalObservation, ObservationGraph
from orbitsim.world import DISCRETE_ACTIONS, AgentAction, WorldConfig

POLICY_NAMES = ("greedy", "potential", "potential+intent", "random", "teleport")

#: Fixed perpendicular nudge used to break exactly head-on symmetric
#: repulsion ties (rotate the attraction direction by +90 degrees).
TIE_BREAK_NUDGE = 0.1


class Policy:
    """Action-selection interface: deterministic given (inputs, stream state)."""

    def reset(self) -> None:
        """Clear per-episode state (baselines carry none)."""

    def act(
        self,
        obs: LocalObservation,
        graph: ObservationGraph,
        rng: Optional[np.random.Generator] = None,
    ) -> AgentAction:
        raise NotImplementedError


def _clamp(force: np.ndarray, fmax: float) -> np.ndarray:
    norm = float(np.hypot(force[0], force[1]))
    if norm > fmax:
        return force * (fmax / norm)
    return force


class GreedyGoalPolicy(Policy):
    """Head straight for the own goal, ignoring everything else.

    Discrete mode: one-step lookahead over the five actions under the
    configured dynamics, picking the action that minimizes the predicted
    distance to the goal (ties broken toward the lowest action index).
    Continuous mode: unit attraction along the goal direction minus a
    velocity-damping term, clamped to the force budget.  Emits a no-op
    within the goal-reach threshold.
    """

    def __init__(self, config: WorldConfig, vel_damping: Optional[float] = None):
        self.config = config
        if vel_damping is None:
            # Sized so the cruise speed f_max / damping covers roughly one
            # reach threshold per step: fast transit, slow enough capture.
            vel_damping = config.action_force_magnitude * config.dt / config.goal_reach_threshold
        self.vel_damping = vel_damping
        self._kernel_args = config.kernel_args()

    def _attraction(self, obs: LocalObservation) -> np.ndarray:
        dist = float(np.hypot(obs.rel_goal[0], obs.rel_goal[1]))
        if dist < self.config.goal_reach_threshold:
            return np.zeros(2)
        return obs.rel_goal / dist - self.vel_damping * obs.velocity

    def _act_continuous(self, obs: LocalObservation) -> np.ndarray:
        return _clamp(self._attraction(obs), self.config.action_force_magnitude)

    def _act_discrete(self, obs: LocalObservation) -> int:
        cfg = self.config
        dist = float(np.hypot(obs.rel_goal[0], obs.rel_goal[1]))
        if dist < cfg.goal_reach_threshold:
            return 0
        goal = obs.position + obs.rel_goal
        regime, mass, p1, p2 = self._kernel_args
        step = _kernels.active.rk4_step
        best = 0
        best_d2 = np.inf
        for idx in range(len(DISCRETE_ACTIONS)):
            fx, fy = DISCRETE_ACTIONS[idx] * cfg.action_force_magnitude
            x, y, _, _ = step(
                regime,
                float(obs.position[0]),
                float(obs.position[1]),
                float(obs.velocity[0]),
                float(obs.velocity[1]),
                float(fx),
                float(fy),
                mass,
                p1,
                p2,
                cfg.dt,
            )
            d2 = (x - goal[0]) ** 2 + (y - goal[1]) ** 2
            if d2 < best_d2:
                best_d2 = d2
                best = idx
        return best

    def act(self, obs, graph, rng=None) -> AgentAction:
        if self.config.action_mode == "continuous":
            return self._act_continuous(obs)
        return self._act_discrete(obs)


class PotentialFieldPolicy(GreedyGoalPolicy):
    """Goal attraction plus inverse-square repulsion from nearby entities.

    Repulsion applies to physical neighbors (agents and obstacles) within
    the sensing radius, with the classic (1/rho - 1/d)/rho^2 profile.  An
    exactly head-on repulsor is disambiguated by a fixed +90-degree nudge.
    With no neighbors the continuous action equals the greedy baseline
    exactly.
    """

    def __init__(
        self,
        config: WorldConfig,
        vel_damping: Optional[float] = None,
        repulsion_gain: Optional[float] = None,
    ):
        super().__init__(config, vel_damping)
        d = config.sensing_radius
        self.repulsion_gain = 0.1 * d * d if repulsion_gain is None else repulsion_gain

    def _repulsion_from(
        self, delta: np.ndarray, cutoff: float, gain: float
    ) -> Optional[np.ndarray]:
        rho = float(np.hypot(delta[0], delta[1]))
        if rho >= cutoff:
            return None
        if rho == 0.0:
            rho = self.config.contact_margin
            away = np.array([1.0, 0.0])
        else:
            away = -delta / rho
        mag = gain * (1.0 / rho - 1.0 / cutoff) / (rho * rho)
        return mag * away

    def _neighbor_rows(self, graph: ObservationGraph) -> np.ndarray:
        physical = (graph.kinds == KIND_AGENT) | (graph.kinds == KIND_OBSTACLE)
        rows = np.nonzero(physical)[0]
        return rows[graph.node_ids[rows] != graph.center]

    def _repulsion_gain_for(self, graph: ObservationGraph, row: int) -> float:
        return self.repulsion_gain

    def _field(self, obs: LocalObservation, graph: ObservationGraph) -> np.ndarray:
        d = self.config.sensing_radius
        attraction = self._attraction(obs)
        force = attraction
        head_on = False
        for r in self._neighbor_rows(graph):
            rep = self._repulsion_from(graph.rel_pos[r], d, self._repulsion_gain_for(graph, r))
            if rep is None:
                continue
            force = force + rep
            cross = attraction[0] * rep[1] - attraction[1] * rep[0]
            if cross == 0.0 and attraction[0] * rep[0] + attraction[1] * rep[1] < 0.0:
                head_on = True
        intent = self._intent_field(obs, graph)
        if intent is not None:
            force = force + intent
        if head_on:
            att_norm = float(np.hypot(attraction[0], attraction[1]))
            if att_norm > 0.0:
                perp = np.array([-attraction[1], attraction[0]]) / att_norm
                force = force + TIE_BREAK_NUDGE * self.config.action_force_magnitude * perp
        return force

    def _intent_field(self, obs, graph) -> Optional[np.ndarray]:
        return None

    def act(self, obs, graph, rng=None) -> AgentAction:
        force = self._field(obs, graph)
        if self.config.action_mode == "continuous":
            return _clamp(force, self.config.action_force_magnitude)
        if force[0] == 0.0 and force[1] == 0.0:
            return 0
        dots = DISCRETE_ACTIONS[1:] @ force
        return int(np.argmax(dots)) + 1


class IntentPotentialPolicy(PotentialFieldPolicy):
    """Potential field with a predictability discount from shared goals.

    A neighbor sitting on its announced goal is stationkeeping, so its
    motion is predictable and a full-gain avoidance bubble around it is
    wasted caution; this variant scales the repulsion from such parked
    neighbors down, letting the agent settle on goals that the plain
    field keeps out of reach.  With hidden goals (or for neighbors whose
    goal is unknown) the behavior is exactly the plain potential field.
    """

    def __init__(
        self,
        config: WorldConfig,
        vel_damping: Optional[float] = None,
        repulsion_gain: Optional[float] = None,
        parked_discount: float = 0.1,
    ):
        super().__init__(config, vel_damping, repulsion_gain)
        self.parked_discount = parked_discount
        self._parked_eps = 2.0 * config.goal_reach_threshold

    def _repulsion_gain_for(self, graph: ObservationGraph, row: int) -> float:
        if graph.kinds[row] == KIND_AGENT and graph.has_goal[row]:
            offset = graph.rel_goal[row] - graph.rel_pos[row]
            if float(np.hypot(offset[0], offset[1])) < self._parked_eps:
                return self.repulsion_gain * self.parked_discount
        return self.repulsion_gain


class RandomPolicy(Policy):
    """Uniform floor baseline: uniform discrete action or uniform direction
    with uniform magnitude within the force budget."""

    def __init__(self, config: WorldConfig):
        self.config = config

    def act(self, obs, graph, rng=None) -> AgentAction:
        if rng is None:
            raise ValueError("random policy requires a random stream")
        if self.config.action_mode == "discrete5":
            return int(rng.integers(len(DISCRETE_ACTIONS)))
        angle = rng.uniform(0.0, 2.0 * np.pi)
        mag = rng.uniform(0.0, self.config.action_force_magnitude)
        return np.array([mag * np.cos(angle), mag * np.sin(angle)])


class TeleportStub(Policy):
    """Always-succeed stub: the harness snaps the agent onto its goal at
    episode start (metrics plumbing oracle, not a physical controller)."""

    teleport_to_goal = True

    def __init__(self, config: WorldConfig):
        self.config = config

    def act(self, obs, graph, rng=None) -> AgentAction:
        return 0 if self.config.action_mode == "discrete5" else np.zeros(2)


class ScriptedPolicy(Policy):
    """Replays a fixed action sequence (test choreography helper)."""

    def __init__(self, actions: Sequence[AgentAction], after: AgentAction = 0):
        self.actions = list(actions)
        self.after = after
        self._cursor = 0

    def reset(self) -> None:
        self._cursor = 0

    def act(self, obs, graph, rng=None) -> AgentAction:
        if self._cursor < len(self.actions):
            action = self.actions[self._cursor]
            self._cursor += 1
            return action
        return self.after


def make_policy(name: str, config: WorldConfig, **kwargs) -> Policy:
    """Construct a policy by CLI name."""
    if name == "greedy":
        return GreedyGoalPolicy(config, **kwargs)
    if name == "potential":
        return PotentialFieldPolicy(config, **kwargs)
    if name == "potential+intent":
        return IntentPotentialPolicy(config, **kwargs)
    if name == "random":
        return RandomPolicy(config)
    if name == "teleport":
        return TeleportStub(config)
    if name == "external":
        raise ValueError(
            "policy 'external' is served through the bridge API "
            "(orbitsim_bridge.run_protocol), not by name"
        )
    raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
