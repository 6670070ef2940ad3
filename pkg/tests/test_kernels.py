"""Cross-implementation checks: the pure-Python and compiled kernels must
produce bit-identical doubles, and the step kernel must honor the contact,
clamping and bookkeeping conventions."""

import math

import numpy as np
import pytest

from orbitsim._kernels import available_implementations, pure

IMPLS = available_implementations()


def impl_pairs():
    names = list(IMPLS)
    return [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]


def _world_arrays(rng, n_agents=3, n_obstacles=3):
    n = 2 * n_agents + n_obstacles
    pos = rng.uniform(-1.0, 1.0, (n, 2))
    vel = np.zeros((n, 2))
    vel[:n_agents] = rng.uniform(-2e-3, 2e-3, (n_agents, 2))
    control = rng.uniform(-1.0, 1.0, (n_agents, 2))
    radii = np.full(n, 0.025)
    radii[n_agents : 2 * n_agents] = 0.05
    kinds = np.concatenate(
        [
            np.full(n_agents, pure.KIND_AGENT),
            np.full(n_agents, pure.KIND_GOAL),
            np.full(n_obstacles, pure.KIND_OBSTACLE),
        ]
    ).astype(np.uint8)
    return pos, vel, control, radii, kinds


@pytest.mark.parametrize("a,b", impl_pairs())
def test_rk4_bitwise_equal_across_implementations(a, b):
    ka, kb = IMPLS[a], IMPLS[b]
    rng = np.random.default_rng(0)
    for _ in range(3000):
        state = rng.uniform(-2, 2, 6).tolist()
        mass = float(rng.uniform(0.5, 200.0))
        regime = int(rng.integers(0, 3))
        p1 = float(rng.uniform(1e-4, 1.0))
        p2 = float(rng.uniform(0.9, 1.1))
        dt = float(rng.uniform(0.01, 40.0))
        assert ka.rk4_step(regime, *state, mass, p1, p2, dt) == kb.rk4_step(
            regime, *state, mass, p1, p2, dt
        )


@pytest.mark.parametrize("a,b", impl_pairs())
def test_softplus_and_contact_bitwise_equal(a, b):
    ka, kb = IMPLS[a], IMPLS[b]
    for z in (-1e6, -50.0, -10.0, -1e-9, 0.0, 1e-9, 10.0, 50.0, 700.0, 1e6):
        assert ka.softplus(z) == kb.softplus(z)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        dist = float(rng.uniform(0.0, 0.5))
        rsum = float(rng.uniform(0.01, 0.2))
        assert ka.contact_force_magnitude(dist, rsum, 100.0, 1e-3) == kb.contact_force_magnitude(
            dist, rsum, 100.0, 1e-3
        )


@pytest.mark.parametrize("a,b", impl_pairs())
def test_step_world_bitwise_equal(a, b):
    ka, kb = IMPLS[a], IMPLS[b]
    for trial in range(200):
        rng = np.random.default_rng(trial)
        arrays_a = _world_arrays(rng)
        arrays_b = tuple(x.copy() for x in arrays_a)
        outs = []
        for impl, arrays in ((ka, arrays_a), (kb, arrays_b)):
            n = len(arrays[4])
            overlap = np.zeros((n, n), np.uint8)
            connect = np.zeros(3, np.uint8)
            deg = impl.step_world(
                *arrays, 3, pure.REGIME_CW, 100.0, 1.1e-3, 0.0,
                100.0, 1e-3, 1.0, 36.0, 1.0, overlap, connect,
            )
            outs.append((arrays[0].copy(), arrays[1].copy(), overlap, connect, deg))
        for xa, xb in zip(*outs):
            assert np.array_equal(xa, xb)


def test_softplus_matches_naive_formula():
    for z in (-20.0, -1.0, 0.0, 0.5, 3.0, 20.0):
        np.testing.assert_allclose(pure.softplus(z), math.log1p(math.exp(z)), rtol=1e-15)
    # Stable for arguments that overflow exp().
    assert pure.softplus(1e4) == 1e4


@pytest.mark.parametrize("impl", list(IMPLS))
def test_contact_momentum_conserved_for_agent_pair(impl):
    # Equal and opposite contact forces: ballistic ground agents exchange
    # momentum exactly (gamma = 0, no control force, walls far away).
    k = IMPLS[impl]
    pos = np.array([[-0.02, 0.0], [0.02, 0.0], [5.0, 5.0], [6.0, 6.0]])
    vel = np.array([[0.1, 0.0], [-0.1, 0.0], [0.0, 0.0], [0.0, 0.0]])
    control = np.zeros((2, 2))
    radii = np.array([0.025, 0.025, 0.01, 0.01])
    kinds = np.array([0, 0, 2, 2], dtype=np.uint8)
    before = vel[:2].sum(axis=0).copy()
    overlap = np.zeros((4, 4), np.uint8)
    connect = np.zeros(2, np.uint8)
    k.step_world(
        pos, vel, control, radii, kinds, 2, pure.REGIME_GROUND, 1.0, 0.0, 0.0,
        100.0, 1e-3, 100.0, 0.1, 1.0, overlap, connect,
    )
    after = vel[:2].sum(axis=0)
    np.testing.assert_array_equal(before, after)
    assert overlap[0, 1] == 1 and overlap[1, 0] == 1


@pytest.mark.parametrize("impl", list(IMPLS))
def test_coincident_agents_use_plus_x_fallback(impl):
    k = IMPLS[impl]
    pos = np.zeros((2, 2))
    vel = np.zeros((2, 2))
    control = np.zeros((2, 2))
    radii = np.array([0.025, 0.025])
    kinds = np.array([0, 0], dtype=np.uint8)
    overlap = np.zeros((2, 2), np.uint8)
    connect = np.zeros(2, np.uint8)
    deg = k.step_world(
        pos, vel, control, radii, kinds, 2, pure.REGIME_GROUND, 1.0, 0.0, 0.0,
        100.0, 1e-3, 10.0, 0.1, 1.0, overlap, connect,
    )
    assert deg == 1
    assert pos[0, 0] > 0.0 > pos[1, 0]  # first agent pushed +x, second -x
    assert pos[0, 1] == 0.0 and pos[1, 1] == 0.0


@pytest.mark.parametrize("impl", list(IMPLS))
def test_wall_clamp_zeroes_normal_velocity(impl):
    k = IMPLS[impl]
    pos = np.array([[0.99, 0.0]])
    vel = np.array([[0.5, 0.01]])
    control = np.array([[1.0, 0.0]])
    radii = np.array([0.025])
    kinds = np.array([0], dtype=np.uint8)
    overlap = np.zeros((1, 1), np.uint8)
    connect = np.zeros(1, np.uint8)
    k.step_world(
        pos, vel, control, radii, kinds, 1, pure.REGIME_GROUND, 1.0, 0.0, 0.0,
        100.0, 1e-3, 1.0, 1.0, 1.0, overlap, connect,
    )
    assert pos[0, 0] == 1.0
    assert vel[0, 0] == 0.0
    assert vel[0, 1] != 0.0  # tangential component untouched


@pytest.mark.parametrize("impl", list(IMPLS))
def test_connectivity_uses_prestep_positions(impl):
    k = IMPLS[impl]
    # Obstacle within the sensing radius before the step; the agent flies
    # away during the step but connectivity reflects the acted-on state.
    pos = np.array([[0.0, 0.0], [0.9, 0.0]])
    vel = np.array([[-0.5, 0.0], [0.0, 0.0]])
    control = np.zeros((1, 2))
    radii = np.array([0.025, 0.025])
    kinds = np.array([0, 1], dtype=np.uint8)
    overlap = np.zeros((2, 2), np.uint8)
    connect = np.zeros(1, np.uint8)
    k.step_world(
        pos, vel, control, radii, kinds, 1, pure.REGIME_GROUND, 1.0, 0.0, 0.0,
        100.0, 1e-3, 10.0, 1.0, 1.0, overlap, connect,
    )
    assert connect[0] == 1
    assert np.hypot(pos[0, 0] - pos[1, 0], pos[0, 1] - pos[1, 1]) > 1.0


def test_goals_are_non_physical():
    # A goal sitting on top of an agent exerts no force and never overlaps.
    pos = np.array([[0.0, 0.0], [0.0, 0.0]])
    vel = np.zeros((2, 2))
    control = np.zeros((1, 2))
    radii = np.array([0.025, 0.05])
    kinds = np.array([0, 2], dtype=np.uint8)
    overlap = np.zeros((2, 2), np.uint8)
    connect = np.zeros(1, np.uint8)
    deg = pure.step_world(
        pos, vel, control, radii, kinds, 1, pure.REGIME_GROUND, 1.0, 0.25, 0.0,
        100.0, 1e-3, 1.0, 0.1, 1.0, overlap, connect,
    )
    assert deg == 0
    assert not overlap.any()
    np.testing.assert_array_equal(pos[0], [0.0, 0.0])


@pytest.mark.skipif("cython" not in IMPLS, reason="compiled kernel not built")
def test_compiled_kernel_agent_capacity():
    k = IMPLS["cython"]
    n_agents = 65
    pos = np.zeros((n_agents, 2))
    vel = np.zeros((n_agents, 2))
    control = np.zeros((n_agents, 2))
    radii = np.full(n_agents, 0.01)
    kinds = np.zeros(n_agents, dtype=np.uint8)
    with pytest.raises(ValueError):
        k.step_world(
            pos, vel, control, radii, kinds, n_agents, pure.REGIME_GROUND, 1.0,
            0.0, 0.0, 100.0, 1e-3, 1.0, 0.1, 1.0,
            np.zeros((n_agents, n_agents), np.uint8), np.zeros(n_agents, np.uint8),
        )
