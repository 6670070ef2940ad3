#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-Python fallback.

Times the raw step kernel on a default-sized world and a full episode
through the harness under each available implementation, and prints the
speedup.  Run as: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from orbitsim._kernels import available_implementations, pure


def bench_step_kernel(impl, n_agents=3, n_obstacles=3, repeats=20_000):
    n = 2 * n_agents + n_obstacles
    rng = np.random.default_rng(0)
    pos = rng.uniform(-1.0, 1.0, (n, 2))
    vel = np.zeros((n, 2))
    control = rng.uniform(-1.0, 1.0, (n_agents, 2))
    radii = np.full(n, 0.025)
    kinds = np.concatenate(
        [
            np.full(n_agents, pure.KIND_AGENT),
            np.full(n_agents, pure.KIND_GOAL),
            np.full(n_obstacles, pure.KIND_OBSTACLE),
        ]
    ).astype(np.uint8)
    overlap = np.zeros((n, n), dtype=np.uint8)
    connect = np.zeros(n_agents, dtype=np.uint8)

    start = time.perf_counter()
    for _ in range(repeats):
        overlap.fill(0)
        impl.step_world(
            pos, vel, control, radii, kinds, n_agents, pure.REGIME_CW,
            100.0, 1.1e-3, 0.0, 100.0, 1e-3, 1.0, 36.0, 1.0, overlap, connect,
        )
    return (time.perf_counter() - start) / repeats


def bench_episode(episodes=20):
    # Re-import with the implementation forced via the selection seam.
    import orbitsim._kernels as kernels
    from orbitsim.harness import run_episode
    from orbitsim.world import WorldConfig

    cfg = WorldConfig()
    out = {}
    saved = kernels.active
    try:
        for name, impl in available_implementations().items():
            kernels.active = impl
            run_episode(cfg, "potential", 0)  # warm up
            start = time.perf_counter()
            for seed in range(episodes):
                run_episode(cfg, "potential", seed)
            out[name] = (time.perf_counter() - start) / episodes
    finally:
        kernels.active = saved
    return out


def main():
    impls = available_implementations()
    print(f"implementations: {', '.join(impls)}")

    print("\nstep_world kernel (9 entities, CW regime):")
    kernel_times = {}
    for name, impl in impls.items():
        kernel_times[name] = bench_step_kernel(impl)
        print(f"  {name:8s} {kernel_times[name] * 1e6:8.2f} us/step")
    if len(kernel_times) == 2:
        print(f"  speedup  {kernel_times['python'] / kernel_times['cython']:6.1f}x")

    print("\nfull episode (potential policy, 100 steps, 3 agents):")
    episode_times = bench_episode()
    for name, t in episode_times.items():
        print(f"  {name:8s} {t * 1e3:8.2f} ms/episode")
    if len(episode_times) == 2:
        print(f"  speedup  {episode_times['python'] / episode_times['cython']:6.1f}x")


if __name__ == "__main__":
    main()
