"""Agent-entity observation graphs.

Each agent sees a graph over the entities within the sensing radius of
at least one agent, with every node feature expressed relative to the
observing agent.  Edges are radius-gated and direction-typed: an edge
(u -> v) exists exactly when u != v, the center distance is at most the
sensing radius, and v is an agent (agent-agent proximity therefore
yields both directions, non-agent entities only feed into agents).

Node features follow a fixed order.  Goal-sharing variant:
``[rel_pos(2), rel_vel(2), rel_goal(2), one_hot(agent, obstacle, goal)]``;
in the goal-hiding variant agent nodes drop the rel_goal block and
nothing else changes.  For obstacle and goal nodes the goal position is
defined as the node's own position.

The serialized form (see :func:`serialize_graph`) is the interchange
layout consumed by foreign bridges: a node-id list, per-node feature
rows in the order above, and an edge-index list of two integer rows
holding node-row indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from orbitsim._kernels import KIND_AGENT
from orbitsim.world import EntityKind, World

GRAPH_SCHEMA_VERSION = 1
N_KINDS = 3


@dataclass
class NodeFeature:
    """Features of one graph node, relative to the observing agent."""

    rel_position: np.ndarray
    rel_velocity: np.ndarray
    rel_goal_position: Optional[np.ndarray]
    entity_type: EntityKind


@dataclass
class LocalObservation:
    """An agent's own observation: global state plus goal offset."""

    position: np.ndarray
    velocity: np.ndarray
    rel_goal: np.ndarray


class ObservationGraph:
    """Per-agent graph stored as flat arrays (node order: ascending entity id)."""

    def __init__(self, center, node_ids, rel_pos, rel_vel, rel_goal, has_goal, kinds, edges, goal_sharing):
        self.center = int(center)
        self.node_ids = node_ids
        self.rel_pos = rel_pos
        self.rel_vel = rel_vel
        self.rel_goal = rel_goal
        self.has_goal = has_goal
        self.kinds = kinds
        self.edges = edges  # (2, E) rows of node-row indices
        self.goal_sharing = bool(goal_sharing)
        self._row_of = {int(e): i for i, e in enumerate(node_ids)}

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[1]

    def row_of(self, entity_id: int) -> int:
        return self._row_of[int(entity_id)]

    def node_feature(self, entity_id: int) -> NodeFeature:
        r = self.row_of(entity_id)
        return NodeFeature(
            rel_position=self.rel_pos[r].copy(),
            rel_velocity=self.rel_vel[r].copy(),
            rel_goal_position=self.rel_goal[r].copy() if self.has_goal[r] else None,
            entity_type=EntityKind(int(self.kinds[r])),
        )

    @property
    def nodes(self) -> list[tuple[int, NodeFeature]]:
        return [(int(e), self.node_feature(int(e))) for e in self.node_ids]

    def edge_pairs_ids(self) -> list[tuple[int, int]]:
        """(src entity id, dst entity id) pairs in (src, dst) row order."""
        ids = self.node_ids
        return [
            (int(ids[s]), int(ids[d]))
            for s, d in zip(self.edges[0].tolist(), self.edges[1].tolist())
        ]

    def has_edge_incident(self, entity_id: int) -> bool:
        if entity_id not in self._row_of:
            return False
        r = self.row_of(entity_id)
        return bool(np.any(self.edges[0] == r) or np.any(self.edges[1] == r))


def _squared_distances(positions: np.ndarray) -> np.ndarray:
    delta = positions[:, None, :] - positions[None, :, :]
    return delta[..., 0] ** 2 + delta[..., 1] ** 2


def _entity_goal_positions(world: World) -> np.ndarray:
    # Agents point at their goal entity; obstacle and goal nodes use their
    # own position as the goal position.
    goal_pos = world.positions.copy()
    m = world.n_agents
    goal_pos[:m] = world.positions[m : 2 * m]
    return goal_pos


def build_all_graphs(world: World, goal_sharing: Optional[bool] = None) -> list[ObservationGraph]:
    """One graph per agent, sharing the pairwise-distance computation."""
    if goal_sharing is None:
        goal_sharing = world.config.goal_sharing
    m = world.n_agents
    d = world.config.sensing_radius
    d2 = _squared_distances(world.positions)
    within = d2 <= d * d

    member = within[:, :m].any(axis=1)
    sel = np.nonzero(member)[0]
    kinds = world.kinds[sel]
    agent_col = kinds == KIND_AGENT

    edge_matrix = within[np.ix_(sel, sel)] & agent_col[None, :]
    np.fill_diagonal(edge_matrix, False)
    srcs, dsts = np.nonzero(edge_matrix)
    edges = np.stack([srcs, dsts]).astype(np.int64)

    goal_pos = _entity_goal_positions(world)
    pos_sel = world.positions[sel]
    vel_sel = world.velocities[sel]
    goal_sel = goal_pos[sel]

    has_goal = np.ones(len(sel), dtype=bool)
    if not goal_sharing:
        has_goal = ~agent_col

    graphs = []
    for i in range(m):
        rel_goal = goal_sel - world.positions[i]
        if not goal_sharing:
            rel_goal = rel_goal.copy()
            rel_goal[agent_col] = np.nan
        graphs.append(
            ObservationGraph(
                center=i,
                node_ids=sel.astype(np.int64),
                rel_pos=pos_sel - world.positions[i],
                rel_vel=vel_sel - world.velocities[i],
                rel_goal=rel_goal,
                has_goal=has_goal,
                kinds=kinds,
                edges=edges,
                goal_sharing=goal_sharing,
            )
        )
    return graphs


def build_graph(world: World, agent_id: int, goal_sharing: Optional[bool] = None) -> ObservationGraph:
    """The observation graph centered on one agent."""
    if not 0 <= agent_id < world.n_agents:
        raise KeyError(f"unknown agent id {agent_id}")
    return build_all_graphs(world, goal_sharing)[agent_id]


def local_observation(world: World, agent_id: int) -> LocalObservation:
    """Global position/velocity plus the offset to the agent's own goal."""
    if not 0 <= agent_id < world.n_agents:
        raise KeyError(f"unknown agent id {agent_id}")
    gid = world.goal_id(agent_id)
    return LocalObservation(
        position=world.positions[agent_id].copy(),
        velocity=world.velocities[agent_id].copy(),
        rel_goal=world.positions[gid] - world.positions[agent_id],
    )


def connectivity_fraction(episode_graphs: Iterable[Sequence[ObservationGraph]]) -> np.ndarray:
    """Per-agent fraction of steps whose graph has an edge incident to the agent.

    ``episode_graphs`` iterates over steps, each element holding one graph
    per agent (ordered by agent id).
    """
    counts = None
    steps = 0
    for per_agent in episode_graphs:
        if counts is None:
            counts = np.zeros(len(per_agent))
        steps += 1
        for i, g in enumerate(per_agent):
            if g.has_edge_incident(g.center):
                counts[i] += 1
    if counts is None or steps == 0:
        raise ValueError("no graphs provided")
    return counts / steps


def serialize_graph(graph: ObservationGraph) -> dict:
    """Documented interchange form: node ids, feature rows, edge-index rows.

    Feature row order is ``[px, py, vx, vy, (gx, gy,) t_agent, t_obstacle,
    t_goal]`` where the goal block is present exactly when the node carries
    a goal feature (always for non-agent nodes; for agent nodes only in the
    goal-sharing variant).  Edge rows index into the node list.
    """
    features = []
    for r in range(graph.n_nodes):
        row = [
            float(graph.rel_pos[r, 0]),
            float(graph.rel_pos[r, 1]),
            float(graph.rel_vel[r, 0]),
            float(graph.rel_vel[r, 1]),
        ]
        if graph.has_goal[r]:
            row += [float(graph.rel_goal[r, 0]), float(graph.rel_goal[r, 1])]
        one_hot = [0.0] * N_KINDS
        one_hot[int(graph.kinds[r])] = 1.0
        row += one_hot
        features.append(row)
    return {
        "version": GRAPH_SCHEMA_VERSION,
        "center": graph.center,
        "goal_sharing": graph.goal_sharing,
        "node_ids": [int(e) for e in graph.node_ids],
        "node_features": features,
        "edges": [graph.edges[0].tolist(), graph.edges[1].tolist()],
    }


def deserialize_graph(data: dict) -> ObservationGraph:
    """Inverse of :func:`serialize_graph`."""
    if data.get("version") != GRAPH_SCHEMA_VERSION:
        raise ValueError(f"unsupported graph schema version: {data.get('version')!r}")
    node_ids = np.asarray(data["node_ids"], dtype=np.int64)
    n = len(node_ids)
    rel_pos = np.zeros((n, 2))
    rel_vel = np.zeros((n, 2))
    rel_goal = np.full((n, 2), np.nan)
    has_goal = np.zeros(n, dtype=bool)
    kinds = np.zeros(n, dtype=np.uint8)
    for r, row in enumerate(data["node_features"]):
        if len(row) == 4 + 2 + N_KINDS:
            has_goal[r] = True
            rel_goal[r] = row[4:6]
            one_hot = row[6:]
        elif len(row) == 4 + N_KINDS:
            one_hot = row[4:]
        else:
            raise ValueError(f"bad feature row length {len(row)} at node {r}")
        rel_pos[r] = row[0:2]
        rel_vel[r] = row[2:4]
        kinds[r] = int(np.argmax(one_hot))
    edges = np.asarray(data["edges"], dtype=np.int64).reshape(2, -1)
    return ObservationGraph(
        center=data["center"],
        node_ids=node_ids,
        rel_pos=rel_pos,
        rel_vel=rel_vel,
        rel_goal=rel_goal,
        has_goal=has_goal,
        kinds=kinds,
        edges=edges,
        goal_sharing=data["goal_sharing"],
    )
