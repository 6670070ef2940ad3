# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Operation-for-operation twin of ``pure.py``; both must produce
bit-identical doubles (same expression order, same libm calls, build
flags forbid FMA contraction).  Keep the two files in sync.
"""

from libc.math cimport exp, log1p, sqrt

IMPLEMENTATION = "cython"

REGIME_GROUND = 0
REGIME_CW = 1
REGIME_J2 = 2

KIND_AGENT = 0
KIND_OBSTACLE = 1
KIND_GOAL = 2

cdef double _FORCE_TO_KM = 1.0e-3

cdef int C_GROUND = 0
cdef int C_CW = 1
cdef int C_AGENT = 0
cdef int C_GOAL = 2


cdef inline double _softplus(double z) noexcept nogil:
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


def softplus(double z):
    return _softplus(z)


cdef inline void _accel(int regime, double x, double y, double vx, double vy,
                        double fx, double fy, double mass, double p1, double p2,
                        double* ax, double* ay) noexcept nogil:
    if regime == C_GROUND:
        ax[0] = (-p1 / mass) * vx + fx / mass
        ay[0] = (-p1 / mass) * vy + fy / mass
    elif regime == C_CW:
        ax[0] = 3.0 * p1 * p1 * x + 2.0 * p1 * vy + fx / mass * _FORCE_TO_KM
        ay[0] = -2.0 * p1 * vx + fy / mass * _FORCE_TO_KM
    else:
        ax[0] = ((5.0 * p2 * p2 - 2.0) * p1 * p1 * x
                 + 2.0 * p1 * p2 * vy
                 + fx / mass * _FORCE_TO_KM)
        ay[0] = -2.0 * p1 * p2 * vx + fy / mass * _FORCE_TO_KM


def accel_ground(double x, double y, double vx, double vy,
                 double fx, double fy, double mass, double gamma):
    cdef double ax, ay
    _accel(C_GROUND, x, y, vx, vy, fx, fy, mass, gamma, 0.0, &ax, &ay)
    return ax, ay


def accel_cw(double x, double y, double vx, double vy,
             double fx, double fy, double mass, double omega):
    cdef double ax, ay
    _accel(C_CW, x, y, vx, vy, fx, fy, mass, omega, 0.0, &ax, &ay)
    return ax, ay


def accel_j2(double x, double y, double vx, double vy,
             double fx, double fy, double mass, double omega, double c):
    cdef double ax, ay
    _accel(2, x, y, vx, vy, fx, fy, mass, omega, c, &ax, &ay)
    return ax, ay


def accel_z_cw(double z, double omega):
    return -(omega * omega) * z


def accel_z_j2(double z, double omega, double c):
    return (2.0 - 3.0 * c * c) * (omega * omega) * z


cdef inline void _rk4(int regime, double x, double y, double vx, double vy,
                      double fx, double fy, double mass, double p1, double p2,
                      double dt,
                      double* xn, double* yn, double* vxn, double* vyn) noexcept nogil:
    cdef double h = 0.5 * dt
    cdef double ax1, ay1, ax2, ay2, ax3, ay3, ax4, ay4
    cdef double x2, y2, vx2, vy2, x3, y3, vx3, vy3, x4, y4, vx4, vy4

    _accel(regime, x, y, vx, vy, fx, fy, mass, p1, p2, &ax1, &ay1)

    x2 = x + h * vx
    y2 = y + h * vy
    vx2 = vx + h * ax1
    vy2 = vy + h * ay1
    _accel(regime, x2, y2, vx2, vy2, fx, fy, mass, p1, p2, &ax2, &ay2)

    x3 = x + h * vx2
    y3 = y + h * vy2
    vx3 = vx + h * ax2
    vy3 = vy + h * ay2
    _accel(regime, x3, y3, vx3, vy3, fx, fy, mass, p1, p2, &ax3, &ay3)

    x4 = x + dt * vx3
    y4 = y + dt * vy3
    vx4 = vx + dt * ax3
    vy4 = vy + dt * ay3
    _accel(regime, x4, y4, vx4, vy4, fx, fy, mass, p1, p2, &ax4, &ay4)

    xn[0] = x + dt * (vx + 2.0 * vx2 + 2.0 * vx3 + vx4) / 6.0
    yn[0] = y + dt * (vy + 2.0 * vy2 + 2.0 * vy3 + vy4) / 6.0
    vxn[0] = vx + dt * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4) / 6.0
    vyn[0] = vy + dt * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4) / 6.0


def rk4_step(int regime, double x, double y, double vx, double vy,
             double fx, double fy, double mass, double p1, double p2, double dt):
    cdef double xn, yn, vxn, vyn
    _rk4(regime, x, y, vx, vy, fx, fy, mass, p1, p2, dt, &xn, &yn, &vxn, &vyn)
    return xn, yn, vxn, vyn


def contact_force_magnitude(double dist, double radius_sum, double gain, double margin):
    return gain * margin * _softplus((radius_sum - dist) / margin)


def step_world(double[:, ::1] pos,
               double[:, ::1] vel,
               double[:, ::1] control,
               double[::1] radii,
               unsigned char[::1] kinds,
               int n_agents,
               int regime,
               double mass,
               double p1,
               double p2,
               double contact_gain,
               double contact_margin,
               double half_width,
               double dt,
               double sensing_radius,
               unsigned char[:, ::1] overlap_out,
               unsigned char[::1] connect_out):
    """See ``pure.step_world`` for the contract; semantics are identical."""
    cdef int n = kinds.shape[0]
    cdef double d2max = sensing_radius * sensing_radius
    cdef int n_degenerate = 0
    cdef int a, i, j, hit
    cdef double xa, ya, dx, dy, dist, rsum, mag, ux, uy
    cdef double x, y, vx, vy
    cdef double[64] fx
    cdef double[64] fy

    if n_agents > 64:
        raise ValueError("compiled kernel supports at most 64 agents")

    for a in range(n_agents):
        hit = 0
        xa = pos[a, 0]
        ya = pos[a, 1]
        for j in range(n):
            if j == a:
                continue
            dx = pos[j, 0] - xa
            dy = pos[j, 1] - ya
            if dx * dx + dy * dy <= d2max:
                hit = 1
                break
        connect_out[a] = hit

    for a in range(n_agents):
        fx[a] = control[a, 0]
        fy[a] = control[a, 1]

    for i in range(n):
        if kinds[i] == C_GOAL:
            continue
        for j in range(i + 1, n):
            if kinds[j] == C_GOAL:
                continue
            if kinds[i] != C_AGENT and kinds[j] != C_AGENT:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dist = sqrt(dx * dx + dy * dy)
            rsum = radii[i] + radii[j]
            mag = contact_gain * contact_margin * _softplus((rsum - dist) / contact_margin)
            if dist == 0.0:
                ux = 1.0
                uy = 0.0
                n_degenerate += 1
            else:
                ux = dx / dist
                uy = dy / dist
            if kinds[i] == C_AGENT:
                fx[i] = fx[i] + mag * ux
                fy[i] = fy[i] + mag * uy
            if kinds[j] == C_AGENT:
                fx[j] = fx[j] - mag * ux
                fy[j] = fy[j] - mag * uy

    for a in range(n_agents):
        _rk4(regime, pos[a, 0], pos[a, 1], vel[a, 0], vel[a, 1],
             fx[a], fy[a], mass, p1, p2, dt, &x, &y, &vx, &vy)
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
        if kinds[i] == C_GOAL:
            continue
        for j in range(i + 1, n):
            if kinds[j] == C_GOAL:
                continue
            if kinds[i] != C_AGENT and kinds[j] != C_AGENT:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dist = sqrt(dx * dx + dy * dy)
            if dist < radii[i] + radii[j]:
                overlap_out[i, j] = 1
                overlap_out[j, i] = 1

    return n_degenerate
