"""Relative-motion and ground dynamics.

Three acceleration models (damped double integrator on the ground,
Clohessy-Wiltshire relative motion about a circular-orbit target, and
the J2-perturbed variant), a fixed-step RK4 integrator, and closed-form
force-free/constant-force solutions used as verification oracles.

Units: the ground model works in meters, m/s and N with accelerations
in m/s^2; the space models work in kilometers and km/s, with the
force/mass term converted from m/s^2 to km/s^2 by a factor 1e-3.  All
unit conversions live in this module (and its kernel twins) only.

The in-plane coordinates are the radial (x) and in-track (y) axes of
the target-centered frame; the decoupled cross-track (z) axis is
propagated separately and is unused by the 2D environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from orbitsim import _kernels
from orbitsim._kernels import REGIME_CW, REGIME_GROUND, REGIME_J2

# Physical constants (km, s).
J2_EARTH = 1.08263e-3
EARTH_RADIUS_KM = 6378.137
EARTH_MU_KM3_S2 = 398600.4418
DEFAULT_ORBIT_RADIUS_KM = 6878.137  # 500 km altitude

#: Inclination at which the oblateness correction vanishes (c = 1),
#: i.e. half the angle whose cosine is -1/3, about 54.7356 degrees.
MAGIC_INCLINATION_RAD = 0.5 * math.acos(-1.0 / 3.0)


def mean_motion(orbit_radius_km: float, mu: float = EARTH_MU_KM3_S2) -> float:
    """Orbital rate (rad/s) of a circular orbit of the given radius."""
    if orbit_radius_km <= 0.0:
        raise ValueError(f"orbit_radius_km must be > 0, got {orbit_radius_km}")
    return math.sqrt(mu / orbit_radius_km**3)


DEFAULT_MEAN_MOTION = mean_motion(DEFAULT_ORBIT_RADIUS_KM)


@dataclass
class State2D:
    """In-plane state: ``position`` and ``velocity`` as (2,) float arrays."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.velocity = np.asarray(self.velocity, dtype=np.float64)
        if self.position.shape != (2,) or self.velocity.shape != (2,):
            raise ValueError("State2D requires 2-vectors for position and velocity")

    @classmethod
    def of(cls, x: float, y: float, vx: float, vy: float) -> "State2D":
        return cls(np.array([x, y]), np.array([vx, vy]))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.position).all() and np.isfinite(self.velocity).all())


@dataclass
class StateZ:
    """Cross-track state (km, km/s); decoupled from the in-plane motion."""

    z: float
    z_dot: float


@dataclass(frozen=True)
class GroundParams:
    """Double-integrator parameters: mass (kg) and damping gamma (kg/s)."""

    mass: float = 1.0
    gamma: float = 0.25

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class CwParams:
    """Clohessy-Wiltshire parameters: target mean motion (rad/s) and mass (kg)."""

    omega_n: float = DEFAULT_MEAN_MOTION
    mass: float = 100.0

    def __post_init__(self):
        if self.omega_n <= 0.0:
            raise ValueError(f"omega_n must be > 0, got {self.omega_n}")
        if self.mass <= 0.0:
            raise ValueError(f"mass must be > 0, got {self.mass}")


def c_param(
    inclination_rad: float,
    j2: float = J2_EARTH,
    earth_radius_km: float = EARTH_RADIUS_KM,
    orbit_radius_km: float = DEFAULT_ORBIT_RADIUS_KM,
) -> tuple[float, float]:
    """Oblateness correction for the perturbed relative-motion model.

    Parameters
    ----------
    inclination_rad : float
        Orbit inclination relative to the equator, radians.
    j2 : float
        Zonal harmonic coefficient of the central body.
    earth_radius_km, orbit_radius_km : float
        Body radius and circular target-orbit radius, km.

    Returns
    -------
    (s, c) : tuple of float
        ``s = 3*j2*Re^2/(8 r^2) * (1 + 3 cos(2 phi))`` and ``c = sqrt(1+s)``.
    """
    if not orbit_radius_km > earth_radius_km > 0.0:
        raise ValueError(
            "require orbit_radius_km > earth_radius_km > 0, got "
            f"orbit_radius_km={orbit_radius_km}, earth_radius_km={earth_radius_km}"
        )
    s = (3.0 * j2 * earth_radius_km * earth_radius_km / (8.0 * orbit_radius_km * orbit_radius_km)) * (
        1.0 + 3.0 * math.cos(2.0 * inclination_rad)
    )
    if 1.0 + s <= 0.0:
        raise ValueError(f"1 + s must be > 0, got s={s}")
    return s, math.sqrt(1.0 + s)


@dataclass(frozen=True)
class J2Params:
    """Perturbed-model parameters; ``c`` is derived and validated at construction."""

    omega_n: float = DEFAULT_MEAN_MOTION
    mass: float = 100.0
    inclination_rad: float = MAGIC_INCLINATION_RAD
    j2: float = J2_EARTH
    earth_radius_km: float = EARTH_RADIUS_KM
    orbit_radius_km: float = DEFAULT_ORBIT_RADIUS_KM
    s: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if self.omega_n <= 0.0:
            raise ValueError(f"omega_n must be > 0, got {self.omega_n}")
        if self.mass <= 0.0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        s, c = c_param(self.inclination_rad, self.j2, self.earth_radius_km, self.orbit_radius_km)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "c", c)


def ground_accel(
    state: State2D,
    control_force: np.ndarray,
    contact_force: np.ndarray,
    params: GroundParams,
) -> np.ndarray:
    """Damped double-integrator acceleration (m/s^2)."""
    fx = float(control_force[0]) + float(contact_force[0])
    fy = float(control_force[1]) + float(contact_force[1])
    ax, ay = _kernels.active.accel_ground(
        float(state.position[0]),
        float(state.position[1]),
        float(state.velocity[0]),
        float(state.velocity[1]),
        fx,
        fy,
        params.mass,
        params.gamma,
    )
    return np.array([ax, ay])


def cw_accel(state: State2D, total_force: np.ndarray, params: CwParams) -> np.ndarray:
    """Clohessy-Wiltshire in-plane acceleration (km/s^2); force in newtons."""
    ax, ay = _kernels.active.accel_cw(
        float(state.position[0]),
        float(state.position[1]),
        float(state.velocity[0]),
        float(state.velocity[1]),
        float(total_force[0]),
        float(total_force[1]),
        params.mass,
        params.omega_n,
    )
    return np.array([ax, ay])


def j2_accel(state: State2D, total_force: np.ndarray, params: J2Params) -> np.ndarray:
    """J2-perturbed in-plane acceleration (km/s^2); reduces to CW at c = 1.

    The in-track equation uses the velocity coupling ``-2 omega c xdot``
    (the c = 1 limit must recover the CW in-track equation).
    """
    ax, ay = _kernels.active.accel_j2(
        float(state.position[0]),
        float(state.position[1]),
        float(state.velocity[0]),
        float(state.velocity[1]),
        float(total_force[0]),
        float(total_force[1]),
        params.mass,
        params.omega_n,
        params.c,
    )
    return np.array([ax, ay])


def z_accel(state: StateZ, params: CwParams | J2Params) -> float:
    """Decoupled cross-track acceleration for either space model."""
    if isinstance(params, J2Params):
        return _kernels.active.accel_z_j2(state.z, params.omega_n, params.c)
    return _kernels.active.accel_z_cw(state.z, params.omega_n)


def rk4_step(
    accel_fn: Callable[[State2D, np.ndarray], np.ndarray],
    state: State2D,
    total_force: np.ndarray,
    dt: float,
) -> State2D:
    """One classical RK4 step of (position, velocity) under ``accel_fn``.

    The force is held constant over the step (zero-order hold).  The
    combination is written exactly as in the step kernels so that both
    paths produce bit-identical updates for the built-in models.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h = 0.5 * dt
    p, v = state.position, state.velocity

    a1 = accel_fn(state, total_force)
    p2 = p + h * v
    v2 = v + h * a1
    a2 = accel_fn(State2D(p2, v2), total_force)
    p3 = p + h * v2
    v3 = v + h * a2
    a3 = accel_fn(State2D(p3, v3), total_force)
    p4 = p + dt * v3
    v4 = v + dt * a3
    a4 = accel_fn(State2D(p4, v4), total_force)

    pn = p + dt * (v + 2.0 * v2 + 2.0 * v3 + v4) / 6.0
    vn = v + dt * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
    return State2D(pn, vn)


def propagate(
    regime: int,
    state: State2D,
    total_force: np.ndarray,
    mass: float,
    p1: float,
    p2: float,
    dt: float,
    n_steps: int,
) -> State2D:
    """Repeated kernel RK4 steps under a constant force (oracle helper)."""
    x, y = float(state.position[0]), float(state.position[1])
    vx, vy = float(state.velocity[0]), float(state.velocity[1])
    fx, fy = float(total_force[0]), float(total_force[1])
    step = _kernels.active.rk4_step
    for _ in range(n_steps):
        x, y, vx, vy = step(regime, x, y, vx, vy, fx, fy, mass, p1, p2, dt)
    return State2D.of(x, y, vx, vy)


def cw_closed_form(initial: State2D, omega_n: float, t: float) -> State2D:
    """Analytic force-free Clohessy-Wiltshire propagation.

    Standard state-transition solution,

    ``x(t) = (4 - 3 cos wt) x0 + (sin wt / w) xd0 + (2/w)(1 - cos wt) yd0``
    ``y(t) = 6 (sin wt - wt) x0 + y0 - (2/w)(1 - cos wt) xd0
            + ((4 sin wt - 3 wt)/w) yd0``

    with the corresponding velocity rows.
    """
    if omega_n <= 0.0:
        raise ValueError(f"omega_n must be > 0, got {omega_n}")
    w = omega_n
    wt = w * t
    s = math.sin(wt)
    c = math.cos(wt)
    x0, y0 = float(initial.position[0]), float(initial.position[1])
    vx0, vy0 = float(initial.velocity[0]), float(initial.velocity[1])

    x = (4.0 - 3.0 * c) * x0 + (s / w) * vx0 + (2.0 / w) * (1.0 - c) * vy0
    y = (
        6.0 * (s - wt) * x0
        + y0
        - (2.0 / w) * (1.0 - c) * vx0
        + ((4.0 * s - 3.0 * wt) / w) * vy0
    )
    vx = 3.0 * w * s * x0 + c * vx0 + 2.0 * s * vy0
    vy = 6.0 * w * (c - 1.0) * x0 - 2.0 * s * vx0 + (4.0 * c - 3.0) * vy0
    return State2D.of(x, y, vx, vy)


def ground_closed_form(
    initial: State2D,
    constant_force: np.ndarray,
    params: GroundParams,
    t: float,
) -> State2D:
    """Analytic constant-force damped double-integrator propagation.

    For gamma > 0: ``v(t) = v_inf + (v0 - v_inf) exp(-gamma t / m)`` with
    ``v_inf = f / gamma`` and the position by the analytic integral.  The
    gamma = 0 case falls back to exact ballistic motion.
    """
    m = params.mass
    g = params.gamma
    p0 = initial.position.astype(np.float64)
    v0 = initial.velocity.astype(np.float64)
    f = np.asarray(constant_force, dtype=np.float64)
    if g == 0.0:
        a = f / m
        p = p0 + v0 * t + 0.5 * a * t * t
        v = v0 + a * t
        return State2D(p, v)
    v_inf = f / g
    decay = math.exp(-g * t / m)
    v = v_inf + (v0 - v_inf) * decay
    p = p0 + v_inf * t + (v0 - v_inf) * (m / g) * (1.0 - decay)
    return State2D(p, v)


def z_closed_form_cw(initial: StateZ, omega_n: float, t: float) -> StateZ:
    """Force-free cross-track solution (simple harmonic at the orbital rate)."""
    wt = omega_n * t
    s, c = math.sin(wt), math.cos(wt)
    return StateZ(
        z=c * initial.z + (s / omega_n) * initial.z_dot,
        z_dot=-omega_n * s * initial.z + c * initial.z_dot,
    )
