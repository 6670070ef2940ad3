"""Episode runner, metrics, and the three experiment protocols.

Protocols: the scalability matrix (train sizes x test sizes grid of
reward per agent, time-to-goal fraction, collisions per agent, success
rate), the inclination sensitivity sweep over the perturbed model, and
the paired goal-sharing value sweep (each instance evaluated twice with
identical seeds, once sharing and once hiding goals).

Episodes are independent work units; with ``jobs > 1`` they run in a
process pool and the per-episode records are reduced in episode-index
order, so aggregates are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from orbitsim.obsgraph import build_all_graphs, local_observation
from orbitsim.policy import Policy, make_policy
from orbitsim.world import SimulationError, World, WorldConfig, generate_scenario

DEFAULT_TRAIN_SIZES = (3, 5)
DEFAULT_TEST_SIZES = (3, 5, 10)
DEFAULT_PHI_GRID_DEG = (0.0, 28.0, 45.0, 54.0, 63.0, 72.0, 81.0, 90.0)
DEFAULT_RHO_GRID_KM = tuple(np.linspace(0.0, 1.0, 51).tolist())
MOVING_AVERAGE_SPAN_KM = 0.2

PolicySpec = Union[str, Policy, Sequence[Policy]]


@dataclass
class EpisodeMetrics:
    """Episode-level metrics in the conventions of the evaluation protocol.

    ``T_per_agent`` is the first-reach step divided by the episode length,
    set to 1 for agents that never reach their goal (a reach on the very
    last step also yields 1); ``success`` requires every agent's fraction
    to be strictly below 1.  Collision counts are pair-onset events, with
    each event credited to every involved agent's tally.
    """

    joint_reward: float
    reward_per_agent: np.ndarray
    T: float
    T_per_agent: np.ndarray
    collisions: int
    collisions_per_agent: np.ndarray
    success: bool
    connectivity_per_agent: np.ndarray


@dataclass
class SweepResult:
    """Aggregated experiment outputs plus the per-episode records they
    were reduced from (so every cell is re-derivable)."""

    kind: str
    grid: list
    columns: list[str]
    rows: list[dict]
    records: list[dict] = field(repr=False, default_factory=list)


def episode_seed(base_seed: int, *key: int) -> int:
    """Stable 63-bit episode seed derived from a base seed and a cell key."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def episode_rngs(seed: int, n_agents: int):
    """Derive the episode's independent random streams.

    Returns (scenario seed sequence, goal-reset generator, per-agent
    policy generators).  The goal-reset stream is independent of the
    policy streams so paired runs reset identically regardless of how
    much randomness each policy consumes.
    """
    scenario_ss, reset_ss, policy_ss = np.random.SeedSequence(seed).spawn(3)
    policy_rngs = [np.random.default_rng(s) for s in policy_ss.spawn(n_agents)]
    return scenario_ss, np.random.default_rng(reset_ss), policy_rngs


def metrics_from_world(world: World, reward_per_agent: np.ndarray) -> EpisodeMetrics:
    """Assemble episode metrics from a finished world."""
    cfg = world.config
    m = world.n_agents
    T_per_agent = np.ones(m)
    reached = world.first_reach_step >= 0
    T_per_agent[reached] = world.first_reach_step[reached] / cfg.max_steps
    connectivity = (
        np.mean(np.stack(world.connectivity_log), axis=0)
        if world.connectivity_log
        else np.zeros(m)
    )
    return EpisodeMetrics(
        joint_reward=float(reward_per_agent.sum()),
        reward_per_agent=reward_per_agent,
        T=float(T_per_agent.mean()),
        T_per_agent=T_per_agent,
        collisions=world.collision_pair_events,
        collisions_per_agent=world.agent_collision_counts.copy(),
        success=bool((T_per_agent < 1.0).all()),
        connectivity_per_agent=connectivity,
    )


def _normalize_policies(policies: PolicySpec, config: WorldConfig) -> list[Policy]:
    if isinstance(policies, str):
        # One instance per agent: policies may carry per-episode state.
        return [make_policy(policies, config) for _ in range(config.n_agents)]
    if isinstance(policies, Policy):
        return [policies] * config.n_agents
    policies = list(policies)
    if len(policies) != config.n_agents:
        raise ValueError(
            f"expected {config.n_agents} policies, got {len(policies)}"
        )
    return policies


def run_episode(
    config: WorldConfig,
    policies: PolicySpec,
    seed: int,
    goal_reset: Optional[float] = None,
    trajectory_sink=None,
) -> EpisodeMetrics:
    """Run one full episode and return its metrics.

    When ``goal_reset`` (a rho_max distance) is given, one uniformly
    chosen agent has its goal reset midway through the episode, at step
    ``max_steps // 2``.
    """
    config.validate()
    policy_list = _normalize_policies(policies, config)
    scenario_ss, reset_rng, policy_rngs = episode_rngs(seed, config.n_agents)

    try:
        world = generate_scenario(config, scenario_ss)
        world.trajectory_sink = trajectory_sink
        for p in policy_list:
            p.reset()
        for i, p in enumerate(policy_list):
            if getattr(p, "teleport_to_goal", False):
                world.teleport_agent_to_goal(i)
        world.emit_initial_records()

        reward_totals = np.zeros(config.n_agents)
        half = config.max_steps // 2
        for _ in range(config.max_steps):
            if goal_reset is not None and world.step_index == half:
                agent = int(reset_rng.integers(config.n_agents))
                world.reset_goal(agent, goal_reset, reset_rng)
            graphs = build_all_graphs(world)
            actions = [
                policy_list[i].act(
                    local_observation(world, i), graphs[i], policy_rngs[i]
                )
                for i in range(config.n_agents)
            ]
            outcome = world.step(actions)
            reward_totals += outcome.rewards
    except SimulationError as err:
        raise SimulationError(f"episode seed {seed}: {err}") from err

    return metrics_from_world(world, reward_totals)


def _record_from_metrics(metrics: EpisodeMetrics, index: int, seed: int, **extra) -> dict:
    rec = {
        "index": index,
        "seed": seed,
        "joint_reward": metrics.joint_reward,
        "reward_per_agent": metrics.reward_per_agent.tolist(),
        "T": metrics.T,
        "T_per_agent": metrics.T_per_agent.tolist(),
        "collisions": metrics.collisions,
        "collisions_per_agent": metrics.collisions_per_agent.tolist(),
        "success": metrics.success,
        "connectivity_per_agent": metrics.connectivity_per_agent.tolist(),
    }
    rec.update(extra)
    return rec


def _run_one(task: tuple) -> dict:
    config, policy, seed, goal_reset, index, extra = task
    metrics = run_episode(config, policy, seed, goal_reset=goal_reset)
    return _record_from_metrics(metrics, index, seed, **extra)


def _run_tasks(tasks: list[tuple], jobs: int) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        records = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(tasks) // (jobs * 8))
            records = list(pool.map(_run_one, tasks, chunksize=chunk))
    records.sort(key=lambda r: r["index"])
    return records


def aggregate(records: Sequence[dict]) -> dict:
    """Order-independent summary statistics over per-episode records.

    Means and standard deviations are population-style (n divisor); the
    records are reduced in episode-index order so any parallel schedule
    produces identical output.
    """
    if not records:
        raise ValueError("no records to aggregate")
    ordered = sorted(records, key=lambda r: r["index"])
    joint = np.array([r["joint_reward"] for r in ordered])
    n_agents = len(ordered[0]["reward_per_agent"])
    reward_pa = joint / n_agents
    T = np.array([r["T"] for r in ordered])
    col_pa = np.array(
        [sum(r["collisions_per_agent"]) / n_agents for r in ordered]
    )
    success = np.array([1.0 if r["success"] else 0.0 for r in ordered])
    return {
        "episodes": len(ordered),
        "reward_per_agent_mean": float(reward_pa.mean()),
        "reward_per_agent_std": float(reward_pa.std()),
        "total_reward_mean": float(joint.mean()),
        "total_reward_std": float(joint.std()),
        "T_mean": float(T.mean()),
        "T_std": float(T.std()),
        "collisions_per_agent_mean": float(col_pa.mean()),
        "collisions_per_agent_std": float(col_pa.std()),
        "success_pct": float(100.0 * success.mean()),
        "collisions_median": float(
            np.median(np.array([r["collisions"] for r in ordered]))
        ),
    }


SCALABILITY_COLUMNS = [
    "train_n",
    "test_m",
    "episodes",
    "reward_per_agent_mean",
    "reward_per_agent_std",
    "T_mean",
    "T_std",
    "collisions_per_agent_mean",
    "collisions_per_agent_std",
    "success_pct",
]


def run_scalability(
    config: WorldConfig,
    policy: PolicySpec = "greedy",
    train_sizes: Sequence[int] = DEFAULT_TRAIN_SIZES,
    test_sizes: Sequence[int] = DEFAULT_TEST_SIZES,
    episodes: int = 100,
    base_seed: int = 0,
    jobs: int = 1,
) -> SweepResult:
    """Emit the train-size x test-size grid of the four evaluation metrics.

    The obstacle count stays at the configured value across cells.  With
    scripted baselines the train-size axis only shapes the grid (there is
    no trained model to transfer); the cells validate harness plumbing.
    """
    rows = []
    records: list[dict] = []
    index = 0
    for n in train_sizes:
        for m_test in test_sizes:
            cfg = replace(config, n_agents=int(m_test))
            tasks = []
            for e in range(episodes):
                seed = episode_seed(base_seed, 0, n, m_test, e)
                tasks.append(
                    (cfg, policy, seed, None, index, {"train_n": n, "test_m": m_test})
                )
                index += 1
            cell_records = _run_tasks(tasks, jobs)
            records.extend(cell_records)
            stats = aggregate(cell_records)
            rows.append(
                {
                    "train_n": n,
                    "test_m": m_test,
                    "episodes": stats["episodes"],
                    "reward_per_agent_mean": stats["reward_per_agent_mean"],
                    "reward_per_agent_std": stats["reward_per_agent_std"],
                    "T_mean": stats["T_mean"],
                    "T_std": stats["T_std"],
                    "collisions_per_agent_mean": stats["collisions_per_agent_mean"],
                    "collisions_per_agent_std": stats["collisions_per_agent_std"],
                    "success_pct": stats["success_pct"],
                }
            )
    return SweepResult(
        kind="scalability",
        grid=[list(train_sizes), list(test_sizes)],
        columns=SCALABILITY_COLUMNS,
        rows=rows,
        records=records,
    )


INCLINATION_COLUMNS = [
    "phi_deg",
    "c",
    "runs",
    "total_reward_mean",
    "total_reward_std",
]


def run_inclination_sweep(
    config: WorldConfig,
    policy: PolicySpec = "greedy",
    phi_grid_deg: Sequence[float] = DEFAULT_PHI_GRID_DEG,
    runs: int = 5,
    base_seed: int = 0,
    jobs: int = 1,
) -> SweepResult:
    """Total-reward mean and standard deviation per inclination.

    Forces the perturbed dynamics regime and recomputes the oblateness
    parameter c per inclination; the same seeds are reused across the
    grid so cells are paired.
    """
    rows = []
    records: list[dict] = []
    index = 0
    seeds = [episode_seed(base_seed, 1, r) for r in range(runs)]
    for phi_deg in phi_grid_deg:
        cfg = replace(
            config,
            dynamics_regime="cw_j2",
            inclination_rad=math.radians(phi_deg),
        )
        c = cfg.dynamics_params().c
        tasks = [
            (cfg, policy, seeds[r], None, index + r, {"phi_deg": phi_deg})
            for r in range(runs)
        ]
        index += runs
        cell_records = _run_tasks(tasks, jobs)
        records.extend(cell_records)
        stats = aggregate(cell_records)
        rows.append(
            {
                "phi_deg": phi_deg,
                "c": c,
                "runs": stats["episodes"],
                "total_reward_mean": stats["total_reward_mean"],
                "total_reward_std": stats["total_reward_std"],
            }
        )
    return SweepResult(
        kind="inclination",
        grid=list(phi_grid_deg),
        columns=INCLINATION_COLUMNS,
        rows=rows,
        records=records,
    )


def improvement_pct(share: float, hide: float, decrease_is_better: bool = False):
    """Relative improvement of the sharing arm over the hiding arm, in
    percent; None (a flagged null, never infinity) when the hiding arm's
    value is zero.  With ``decrease_is_better`` the sign is flipped so a
    drop in the metric counts as positive improvement."""
    if hide == 0.0:
        return None
    if decrease_is_better:
        return 100.0 * (hide - share) / hide
    return 100.0 * (share - hide) / hide


GOAL_SHARING_COLUMNS = [
    "rho_max_km",
    "instances",
    "S_share",
    "S_hide",
    "T_share",
    "T_hide",
    "improvement_S_pct",
    "improvement_T_pct",
    "median_collisions_share",
    "median_collisions_hide",
]


def run_goal_sharing_sweep(
    config: WorldConfig,
    policy: PolicySpec = "potential",
    rho_grid_km: Sequence[float] = DEFAULT_RHO_GRID_KM,
    instances: int = 100,
    base_seed: int = 0,
    jobs: int = 1,
) -> SweepResult:
    """Paired goal-sharing value sweep.

    Every instance is evaluated twice with identical seeds, once with
    goal-sharing and once with goal-hiding; only the sharing flag seen
    by the graph builder differs.  Success-rate improvement is
    ``(S_share - S_hide) / S_hide`` as a percentage (null when the
    hiding arm never succeeds); the time improvement has the sign
    flipped since lower T is better.
    """
    rows = []
    records: list[dict] = []
    index = 0
    for rho_idx, rho in enumerate(rho_grid_km):
        arm_tasks = {"share": [], "hide": []}
        for inst in range(instances):
            seed = episode_seed(base_seed, 2, rho_idx, inst)
            for arm, sharing in (("share", True), ("hide", False)):
                cfg = replace(config, goal_sharing=sharing)
                arm_tasks[arm].append(
                    (
                        cfg,
                        policy,
                        seed,
                        float(rho),
                        index,
                        {"rho_max_km": float(rho), "arm": arm, "instance": inst},
                    )
                )
                index += 1
        arm_records = {arm: _run_tasks(tasks, jobs) for arm, tasks in arm_tasks.items()}
        records.extend(arm_records["share"])
        records.extend(arm_records["hide"])

        stats = {arm: aggregate(recs) for arm, recs in arm_records.items()}
        s_share = stats["share"]["success_pct"] / 100.0
        s_hide = stats["hide"]["success_pct"] / 100.0
        t_share = stats["share"]["T_mean"]
        t_hide = stats["hide"]["T_mean"]
        improvement_s = improvement_pct(s_share, s_hide)
        improvement_t = improvement_pct(t_share, t_hide, decrease_is_better=True)
        rows.append(
            {
                "rho_max_km": float(rho),
                "instances": instances,
                "S_share": s_share,
                "S_hide": s_hide,
                "T_share": t_share,
                "T_hide": t_hide,
                "improvement_S_pct": improvement_s,
                "improvement_T_pct": improvement_t,
                "median_collisions_share": stats["share"]["collisions_median"],
                "median_collisions_hide": stats["hide"]["collisions_median"],
            }
        )
    return SweepResult(
        kind="goal_sharing",
        grid=list(rho_grid_km),
        columns=GOAL_SHARING_COLUMNS,
        rows=rows,
        records=records,
    )


def moving_average(
    series: Sequence[Optional[float]],
    window_span: float = MOVING_AVERAGE_SPAN_KM,
    grid_step: float = 0.02,
) -> list[Optional[float]]:
    """Centered moving mean over ``window_span / grid_step`` grid points.

    With the default 0.2 km span on the 20 m grid the window is 10
    points, taken as [i-4, i+5] and truncated at the boundaries.  None
    entries (flagged nulls) are skipped; a window with no defined values
    yields None.
    """
    window = int(round(window_span / grid_step))
    if window < 1:
        raise ValueError("window must span at least one grid point")
    n = len(series)
    out: list[Optional[float]] = []
    hi_off = window // 2
    lo_off = window - hi_off - 1
    for i in range(n):
        lo = max(0, i - lo_off)
        hi = min(n - 1, i + hi_off)
        vals = [series[j] for j in range(lo, hi + 1) if series[j] is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return out
