"""Command-line front end.

Subcommands: ``run`` (single episode with trajectory output),
``scalability``, ``inclination``, ``goal-sharing`` (the three experiment
protocols) and ``validate-dynamics`` (analytic-oracle self-check).

Exit codes: 0 success, 1 validation/configuration error, 2 runtime
simulation error.  The ``ORBITSIM_SEED`` environment variable overrides
the default seed when ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from orbitsim import __version__, dynamics, harness, io as simio
from orbitsim.config import ConfigError, ExperimentSpec, config_as_dict, load_config
from orbitsim.harness import run_episode
from orbitsim.world import PlacementError, SimulationError, WorldConfig


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def validate_dynamics(n_states: int = 5, seed: int = 0) -> dict[str, float]:
    """Analytic-oracle battery; returns named maximum errors."""
    rng = np.random.default_rng(seed)
    omega = dynamics.DEFAULT_MEAN_MOTION
    zero = np.zeros(2)

    # Force-free CW propagation vs the state-transition solution.
    cw_err = 0.0
    for _ in range(n_states):
        x0 = rng.uniform(-0.5, 0.5, 2)
        v0 = rng.uniform(-1.0, 1.0, 2) * omega * 0.5
        state = dynamics.State2D(x0.copy(), v0.copy())
        got = dynamics.propagate(
            dynamics.REGIME_CW, state, zero, 100.0, omega, 0.0, 1.0, 3600
        )
        want = dynamics.cw_closed_form(state, omega, 3600.0)
        p_scale = max(float(np.hypot(*x0)), 1e-12)
        v_scale = max(float(np.hypot(*v0)), 1e-12)
        cw_err = max(
            cw_err,
            float(np.abs(got.position - want.position).max()) / p_scale,
            float(np.abs(got.velocity - want.velocity).max()) / v_scale,
        )

    # Closed 2:1 ellipse: one full period returns to the start.
    x0 = 0.1
    ell = dynamics.State2D.of(x0, 0.0, 0.0, -2.0 * omega * x0)
    period = 2.0 * math.pi / omega
    n_steps = int(math.ceil(period))
    got = dynamics.propagate(
        dynamics.REGIME_CW, ell, zero, 100.0, omega, 0.0, period / n_steps, n_steps
    )
    scale = max(float(np.hypot(*ell.position)), 1e-12)
    vscale = max(float(np.hypot(*ell.velocity)), 1e-12)
    ellipse_err = max(
        float(np.abs(got.position - ell.position).max()) / scale,
        float(np.abs(got.velocity - ell.velocity).max()) / vscale,
    )

    # Damped constant-force ground motion vs the linear-ODE solution.
    params = dynamics.GroundParams(mass=1.0, gamma=0.25)
    force = np.array([1.0, 0.0])
    g0 = dynamics.State2D.of(0.0, 0.0, 0.0, 0.0)
    got = dynamics.propagate(
        dynamics.REGIME_GROUND, g0, force, params.mass, params.gamma, 0.0, 0.1, 1000
    )
    want = dynamics.ground_closed_form(g0, force, params, 100.0)
    gscale = max(float(np.hypot(*want.position)), 1e-12)
    gvscale = max(float(np.hypot(*want.velocity)), 1e-12)
    ground_err = max(
        float(np.abs(got.position - want.position).max()) / gscale,
        float(np.abs(got.velocity - want.velocity).max()) / gvscale,
    )

    # J2 model at c = 1 against CW, random states and forces.
    cw = dynamics.CwParams(omega_n=omega, mass=100.0)
    j2 = dynamics.J2Params(
        omega_n=omega, mass=100.0, inclination_rad=dynamics.MAGIC_INCLINATION_RAD
    )
    j2_err = 0.0
    for _ in range(1000):
        st = dynamics.State2D(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2) * 1e-3)
        f = rng.uniform(-1, 1, 2)
        j2_err = max(
            j2_err,
            float(np.abs(dynamics.j2_accel(st, f, j2) - dynamics.cw_accel(st, f, cw)).max()),
        )

    _, c_magic = dynamics.c_param(dynamics.MAGIC_INCLINATION_RAD)
    return {
        "cw_oracle_rel_err": cw_err,
        "ellipse_return_rel_err": ellipse_err,
        "ground_oracle_rel_err": ground_err,
        "j2_reduction_abs_err": j2_err,
        "c_magic_abs_err": abs(c_magic - 1.0),
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"orbitsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--episodes", type=int, default=None)
        p.add_argument("--policy", type=str, default=None)
        p.add_argument("--out-dir", type=str, default="out")
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument(
            "--goal-hiding",
            action="store_true",
            help="strip other agents' goals from observation graphs",
        )

    for name in ("run", "scalability", "inclination", "goal-sharing"):
        p = sub.add_parser(name)
        common(p)
        if name == "goal-sharing":
            p.add_argument(
                "--plot-data",
                action="store_true",
                help="also emit moving-averaged (rho_max, improvement%%) series",
            )
    sub.add_parser("validate-dynamics")
    return parser


def _resolve(args) -> tuple[WorldConfig, ExperimentSpec]:
    if args.config is not None:
        world, experiment = load_config(args.config)
    else:
        world, experiment = WorldConfig(), ExperimentSpec()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    elif "ORBITSIM_SEED" in os.environ:
        try:
            updates["seed"] = int(os.environ["ORBITSIM_SEED"])
        except ValueError as err:
            raise ConfigError(f"bad ORBITSIM_SEED: {err}") from err
    if args.episodes is not None:
        updates["episodes"] = args.episodes
        updates["instances"] = args.episodes
        updates["runs"] = args.episodes
    if args.policy is not None:
        updates["policy"] = args.policy
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    experiment = dataclasses.replace(experiment, **updates)
    experiment.validate()
    if args.goal_hiding:
        world = dataclasses.replace(world, goal_sharing=False)
    world.validate()
    return world, experiment


def _finish(out_dir: Path, command: str, world, experiment, seeds, outputs, started):
    manifest = simio.build_manifest(
        command=command,
        config_dict=config_as_dict(world, experiment),
        seeds=seeds,
        outputs=[str(p) for p in outputs],
        started_utc=started,
        finished_utc=_utc_now(),
    )
    manifest_path = out_dir / "manifest.json"
    simio.write_manifest(manifest_path, manifest)
    print(f"wrote {', '.join(str(p.name) for p in outputs)} and manifest.json to {out_dir}")


def _cmd_run(args) -> int:
    world, experiment = _resolve(args)
    started = _utc_now()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "trajectory.jsonl"
    episodes_path = out_dir / "episodes.jsonl"
    with simio.JsonlWriter(traj_path) as sink:
        metrics = run_episode(
            world, experiment.policy, experiment.seed, trajectory_sink=sink
        )
    record = harness._record_from_metrics(metrics, 0, experiment.seed)
    simio.write_jsonl(episodes_path, [record])
    print(
        f"episode seed={experiment.seed} joint_reward={metrics.joint_reward:.4f} "
        f"T={metrics.T:.4f} collisions={metrics.collisions} success={metrics.success}"
    )
    _finish(out_dir, "run", world, experiment, [experiment.seed], [traj_path, episodes_path], started)
    return 0


def _run_sweep(args, command: str) -> int:
    world, experiment = _resolve(args)
    started = _utc_now()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if command == "scalability":
        result = harness.run_scalability(
            world,
            policy=experiment.policy,
            train_sizes=tuple(experiment.train_sizes),
            test_sizes=tuple(experiment.test_sizes),
            episodes=experiment.episodes,
            base_seed=experiment.seed,
            jobs=experiment.jobs,
        )
    elif command == "inclination":
        result = harness.run_inclination_sweep(
            world,
            policy=experiment.policy,
            phi_grid_deg=tuple(experiment.phi_grid_deg),
            runs=experiment.runs,
            base_seed=experiment.seed,
            jobs=experiment.jobs,
        )
    else:
        n_points = int(round(experiment.rho_max_km / experiment.rho_step_km)) + 1
        rho_grid = np.linspace(0.0, experiment.rho_max_km, n_points).tolist()
        result = harness.run_goal_sharing_sweep(
            world,
            policy=experiment.policy,
            rho_grid_km=rho_grid,
            instances=experiment.instances,
            base_seed=experiment.seed,
            jobs=experiment.jobs,
        )

    sweep_path = out_dir / "sweep.csv"
    episodes_path = out_dir / "episodes.jsonl"
    simio.write_sweep_csv(sweep_path, result)
    simio.write_jsonl(episodes_path, result.records)
    outputs = [sweep_path, episodes_path]

    if command == "goal-sharing" and getattr(args, "plot_data", False):
        xs = [row["rho_max_km"] for row in result.rows]
        for metric in ("S", "T"):
            series = [row[f"improvement_{metric}_pct"] for row in result.rows]
            smooth = harness.moving_average(
                series, experiment.window_span_km, experiment.rho_step_km
            )
            path = out_dir / f"plot_improvement_{metric}.csv"
            simio.write_series_csv(
                path, xs, smooth, "rho_max_km", f"improvement_{metric}_pct"
            )
            outputs.append(path)

    seeds = sorted({rec["seed"] for rec in result.records})
    _finish(out_dir, command, world, experiment, seeds, outputs, started)
    return 0


def _cmd_validate(_args) -> int:
    errors = validate_dynamics()
    worst = 0.0
    for name, err in errors.items():
        print(f"{name}: {err:.3e}")
        worst = max(worst, err)
    if worst < 1.0e-6:
        print("validate-dynamics: OK (all oracle errors < 1e-6)")
        return 0
    print("validate-dynamics: FAILED (oracle error >= 1e-6)", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for usage errors.
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command in ("scalability", "inclination", "goal-sharing"):
            return _run_sweep(args, args.command)
        return _cmd_validate(args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (SimulationError, PlacementError) as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return 2


def cli_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli_entry()
