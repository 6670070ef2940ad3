"""Pure-Python hot kernels.

This module is the reference implementation of the per-step physics:
acceleration models, the RK4 update, and the whole-world step (contact
forces, integration, wall clamping, overlap and connectivity detection).
The compiled twin in ``_core.pyx`` mirrors it operation-for-operation so
that both produce bit-identical doubles; any arithmetic change here must
be replicated there.

Regime codes: 0 = ground double integrator, 1 = Clohessy-Wiltshire,
2 = J2-perturbed CW.  For space regimes forces are in newtons and the
force/mass term is scaled by 1e-3 to convert m/s^2 to km/s^2.
"""

from math import exp, log1p, sqrt

IMPLEMENTATION = "python"

REGIME_GROUND = 0
REGIME_CW = 1
REGIME_J2 = 2

KIND_AGENT = 0
KIND_OBSTACLE = 1
KIND_GOAL = 2

_FORCE_TO_KM = 1.0e-3


def softplus(z):
    # Overflow-safe log(1 + exp(z)).
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


def accel_ground(x, y, vx, vy, fx, fy, mass, gamma):
    ax = (-gamma / mass) * vx + fx / mass
    ay = (-gamma / mass) * vy + fy / mass
    return ax, ay


def accel_cw(x, y, vx, vy, fx, fy, mass, omega):
    ax = 3.0 * omega * omega * x + 2.0 * omega * vy + fx / mass * _FORCE_TO_KM
    ay = -2.0 * omega * vx + fy / mass * _FORCE_TO_KM
    return ax, ay


def accel_j2(x, y, vx, vy, fx, fy, mass, omega, c):
    ax = (
        (5.0 * c * c - 2.0) * omega * omega * x
        + 2.0 * omega * c * vy
        + fx / mass * _FORCE_TO_KM
    )
    ay = -2.0 * omega * c * vx + fy / mass * _FORCE_TO_KM
    return ax, ay


def accel_z_cw(z, omega):
    return -(omega * omega) * z


def accel_z_j2(z, omega, c):
    return (2.0 - 3.0 * c * c) * (omega * omega) * z


def _accel(regime, x, y, vx, vy, fx, fy, mass, p1, p2):
    # p1 = gamma (ground) or omega (space); p2 = c (J2 only).
    if regime == REGIME_GROUND:
        return accel_ground(x, y, vx, vy, fx, fy, mass, p1)
    if regime == REGIME_CW:
        return accel_cw(x, y, vx, vy, fx, fy, mass, p1)
    return accel_j2(x, y, vx, vy, fx, fy, mass, p1, p2)


def rk4_step(regime, x, y, vx, vy, fx, fy, mass, p1, p2, dt):
    """Classical RK4 update of (position, velocity) with the force held
    constant over the step (zero-order hold).  Returns (x, y, vx, vy)."""
    h = 0.5 * dt

    ax1, ay1 = _accel(regime, x, y, vx, vy, fx, fy, mass, p1, p2)

    x2 = x + h * vx
    y2 = y + h * vy
    vx2 = vx + h * ax1
    vy2 = vy + h * ay1
    ax2, ay2 = _accel(regime, x2, y2, vx2, vy2, fx, fy, mass, p1, p2)

    x3 = x + h * vx2
    y3 = y + h * vy2
    vx3 = vx + h * ax2
    vy3 = vy + h * ay2
    ax3, ay3 = _accel(regime, x3, y3, vx3, vy3, fx, fy, mass, p1, p2)

    x4 = x + dt * vx3
    y4 = y + dt * vy3
    vx4 = vx + dt * ax3
    vy4 = vy + dt * ay3
    ax4, ay4 = _accel(regime, x4, y4, vx4, vy4, fx, fy, mass, p1, p2)

    xn = x + dt * (vx + 2.0 * vx2 + 2.0 * vx3 + vx4) / 6.0
    yn = y + dt * (vy + 2.0 * vy2 + 2.0 * vy3 + vy4) / 6.0
    vxn = vx + dt * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4) / 6.0
    vyn = vy + dt * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4) / 6.0
    return xn, yn, vxn, vyn


def contact_force_magnitude(dist, radius_sum, gain, margin):
    """Soft penetration force magnitude: gain * margin * softplus(overlap/margin)."""
    return gain * margin * softplus((radius_sum - dist) / margin)


def step_world(
    pos,
    vel,
    control,
    radii,
    kinds,
    n_agents,
    regime,
    mass,
    p1,
    p2,
    contact_gain,
    contact_margin,
    half_width,
    dt,
    sensing_radius,
    overlap_out,
    connect_out,
):
    """Advance every agent by one step.

    ``pos``/``vel`` are (n, 2) float64 arrays for all entities (agents
    first); ``control`` is (n_agents, 2) in newtons.  Entities of kind
    goal are non-physical: they exert no contact force and never count
    as overlapping.  Connectivity (any other entity within the sensing
    radius) is evaluated at the pre-step positions, i.e. the state the
    agents acted on; overlap is evaluated at the post-step positions.

    ``overlap_out`` is an (n, n) uint8 matrix the caller has zeroed;
    ``connect_out`` is an (n_agents,) uint8 vector.  Returns the number
    of degenerate (exactly coincident) contact pairs encountered.
    """
    n = len(kinds)
    d2max = sensing_radius * sensing_radius
    n_degenerate = 0

    for a in range(n_agents):
        hit = 0
        xa = float(pos[a, 0])
        ya = float(pos[a, 1])
        for j in range(n):
            if j == a:
                continue
            dx = float(pos[j, 0]) - xa
            dy = float(pos[j, 1]) - ya
            if dx * dx + dy * dy <= d2max:
                hit = 1
                break
        connect_out[a] = hit

    fx = [0.0] * n_agents
    fy = [0.0] * n_agents
    for a in range(n_agents):
        fx[a] = float(control[a, 0])
        fy[a] = float(control[a, 1])

    for i in range(n):
        if kinds[i] == KIND_GOAL:
            continue
        for j in range(i + 1, n):
            if kinds[j] == KIND_GOAL:
                continue
            if kinds[i] != KIND_AGENT and kinds[j] != KIND_AGENT:
                continue
            dx = float(pos[i, 0]) - float(pos[j, 0])
            dy = float(pos[i, 1]) - float(pos[j, 1])
            dist = sqrt(dx * dx + dy * dy)
            rsum = float(radii[i]) + float(radii[j])
            mag = contact_gain * contact_margin * softplus((rsum - dist) / contact_margin)
            if dist == 0.0:
                # Coincident centers: deterministic +x fallback direction.
                ux = 1.0
                uy = 0.0
                n_degenerate += 1
            else:
                ux = dx / dist
                uy = dy / dist
            if kinds[i] == KIND_AGENT:
                fx[i] = fx[i] + mag * ux
                fy[i] = fy[i] + mag * uy
            if kinds[j] == KIND_AGENT:
                fx[j] = fx[j] - mag * ux
                fy[j] = fy[j] - mag * uy

    for a in range(n_agents):
        x, y, vx, vy = rk4_step(
            regime,
            float(pos[a, 0]),
            float(pos[a, 1]),
            float(vel[a, 0]),
            float(vel[a, 1]),
            fx[a],
            fy[a],
            mass,
            p1,
            p2,
            dt,
        )
        if x < -half_width:
            x = -half_width
            vx = 0.0
        elif x > half_width:
            x = half_width
            vx = 0.0
        if y < -half_width:
            y = -half_width
            vy = 0.0
        elif y > half_width:
            y = half_width
            vy = 0.0
        pos[a, 0] = x
        pos[a, 1] = y
        vel[a, 0] = vx
        vel[a, 1] = vy

    for i in range(n):
        if kinds[i] == KIND_GOAL:
            continue
        for j in range(i + 1, n):
            if kinds[j] == KIND_GOAL:
                continue
            if kinds[i] != KIND_AGENT and kinds[j] != KIND_AGENT:
                continue
            dx = float(pos[i, 0]) - float(pos[j, 0])
            dy = float(pos[i, 1]) - float(pos[j, 1])
            dist = sqrt(dx * dx + dy * dy)
            if dist < float(radii[i]) + float(radii[j]):
                overlap_out[i, j] = 1
                overlap_out[j, i] = 1

    return n_degenerate
