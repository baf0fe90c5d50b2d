"""
Circular restricted three-body dynamics with a solar-sail radiation pressure force.

All quantities are nondimensional: unit primary separation, unit total mass and
unit rotation rate. The larger primary (the Sun) sits at ``(-mu, 0, 0)`` and the
smaller one at ``(1 - mu, 0, 0)`` in the barycentric rotating frame.

The sail attitude is given by the cone angle ``alpha`` (tilt of the sail normal
away from the Sun-sail line) and the clock angle ``gamma`` (rotation of that tilt
about the Sun-sail line).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateGeometryError, NotConservedError

# Trigonometric values this close to zero are snapped to exactly zero so that
# alpha = +-pi/2 or gamma = pi reproduce the degenerate force models exactly.
_TRIG_SNAP = 1e-15


def _snap(value: float) -> float:
    return 0.0 if abs(value) < _TRIG_SNAP else float(value)


@dataclass(frozen=True)
class SystemParams:
    """Mass ratio, sail lightness number and attitude angles (radians)."""

    mu: float
    beta: float
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.mu <= 0.5:
            raise ValueError(f"mu must lie in (0, 0.5], got {self.mu}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if not -math.pi / 2 <= self.alpha <= math.pi / 2:
            raise ValueError(f"cone angle must lie in [-pi/2, pi/2], got {self.alpha}")
        if not 0.0 <= self.gamma <= math.pi:
            raise ValueError(f"clock angle must lie in [0, pi], got {self.gamma}")

    @classmethod
    def from_degrees(cls, mu: float, beta: float, alpha_deg: float, gamma_deg: float) -> "SystemParams":
        # Clamp round-off at the closed ends of the angle domains.
        alpha = math.radians(alpha_deg)
        gamma = math.radians(gamma_deg)
        if abs(alpha_deg) == 90.0:
            alpha = math.copysign(math.pi / 2, alpha_deg)
        if gamma_deg == 180.0:
            gamma = math.pi
        return cls(mu=mu, beta=beta, alpha=alpha, gamma=gamma)

    @property
    def alpha_deg(self) -> float:
        return math.degrees(self.alpha)

    @property
    def gamma_deg(self) -> float:
        return math.degrees(self.gamma)

    @cached_property
    def cos_alpha(self) -> float:
        return _snap(math.cos(self.alpha))

    @cached_property
    def sin_alpha(self) -> float:
        return _snap(math.sin(self.alpha))

    @cached_property
    def cos_gamma(self) -> float:
        return _snap(math.cos(self.gamma))

    @cached_property
    def sin_gamma(self) -> float:
        return _snap(math.sin(self.gamma))

    @property
    def srp_factor(self) -> float:
        """``beta * cos^2(alpha) * (1 - mu)``; zero means the SRP force vanishes."""
        return self.beta * self.cos_alpha**2 * (1.0 - self.mu)

    @property
    def srp_active(self) -> bool:
        return self.srp_factor != 0.0

    def with_angles(self, alpha: float, gamma: float) -> "SystemParams":
        return SystemParams(self.mu, self.beta, alpha, gamma)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "beta": self.beta, "alpha": self.alpha, "gamma": self.gamma}


@dataclass(frozen=True)
class State:
    """Position and velocity in the barycentric rotating frame."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))

    @classmethod
    def from_array(cls, y) -> "State":
        y = np.asarray(y, dtype=float)
        return cls(y[:3], y[3:6])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


def _as_state_array(state) -> np.ndarray:
    if isinstance(state, State):
        return state.as_array()
    return np.asarray(state, dtype=float)


def primary_distances(position, mu: float):
    """Return ``(r1, r2)``: distances to the larger and smaller primary."""
    x, y, z = np.asarray(position, dtype=float)
    r1 = math.sqrt((x + mu) ** 2 + y * y + z * z)
    r2 = math.sqrt((x - 1.0 + mu) ** 2 + y * y + z * z)
    return r1, r2


def _check_sail_geometry(position, params: SystemParams):
    x, y, z = np.asarray(position, dtype=float)
    sx = x + params.mu
    r1 = math.sqrt(sx * sx + y * y + z * z)
    rxy = math.hypot(sx, y)
    if r1 == 0.0:
        raise DegenerateGeometryError("position coincides with the larger primary")
    if rxy == 0.0 and params.sin_alpha != 0.0:
        raise DegenerateGeometryError("sail normal undefined on the z-axis through the Sun when sin(alpha) != 0")
    return sx, y, z, r1, rxy


def sail_normal(position, params: SystemParams) -> np.ndarray:
    """Unit sail normal built from cross products with the Sun-sail line."""
    sx, y, z, r1, rxy = _check_sail_geometry(position, params)
    r_hat = np.array([sx, y, z]) / r1
    n = params.cos_alpha * r_hat
    if params.sin_alpha != 0.0:
        z_hat = np.array([0.0, 0.0, 1.0])
        e1 = np.cross(r_hat, z_hat)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(np.cross(r_hat, z_hat), r_hat)
        e2 /= np.linalg.norm(e2)
        n = n + params.sin_alpha * params.sin_gamma * e1 + params.sin_alpha * params.cos_gamma * e2
    return n


def sail_normal_components(position, params: SystemParams) -> np.ndarray:
    """The same unit normal written out component by component."""
    sx, y, z, r1, rxy = _check_sail_geometry(position, params)
    ca, sa, cg, sg = params.cos_alpha, params.sin_alpha, params.cos_gamma, params.sin_gamma
    if sa == 0.0:
        return ca * np.array([sx, y, z]) / r1
    return np.array(
        [
            ca * sx / r1 + sa * sg * y / rxy - sa * cg * z * sx / (r1 * rxy),
            ca * y / r1 - sa * sg * sx / rxy - sa * cg * y * z / (r1 * rxy),
            ca * z / r1 + sa * cg * rxy / r1,
        ]
    )


def srp_accel(position, params: SystemParams) -> np.ndarray:
    """Radiation pressure acceleration from the vector form ``beta (1-mu)/r1^2 (r1_hat . n)^2 n``."""
    sx, y, z, r1, rxy = _check_sail_geometry(position, params)
    if params.srp_factor == 0.0:
        return np.zeros(3)
    n = sail_normal(position, params)
    r_hat = np.array([sx, y, z]) / r1
    return params.beta * (1.0 - params.mu) / r1**2 * np.dot(r_hat, n) ** 2 * n


def srp_accel_components(position, params: SystemParams) -> np.ndarray:
    """Radiation pressure acceleration written out component by component."""
    sx, y, z, r1, rxy = _check_sail_geometry(position, params)
    f = params.srp_factor
    if f == 0.0:
        return np.zeros(3)
    ca, sa, cg, sg = params.cos_alpha, params.sin_alpha, params.cos_gamma, params.sin_gamma
    if sa == 0.0:
        return f * ca / r1**3 * np.array([sx, y, z])
    k = f / r1**2
    return np.array(
        [
            k * (sx * ca / r1 + y * sa * sg / rxy - z * sx * cg * sa / (r1 * rxy)),
            k * (y * ca / r1 - sx * sa * sg / rxy - y * z * cg * sa / (r1 * rxy)),
            f / r1**3 * (z * ca + rxy * cg * sa),
        ]
    )


def gravity_accel(position, mu: float) -> np.ndarray:
    """Gradient of the effective potential (centrifugal plus both primaries)."""
    x, y, z = np.asarray(position, dtype=float)
    r1, r2 = primary_distances(position, mu)
    if r1 == 0.0 or r2 == 0.0:
        raise DegenerateGeometryError("position coincides with a primary")
    c1 = (1.0 - mu) / r1**3
    c2 = mu / r2**3
    return np.array(
        [
            x - c1 * (x + mu) - c2 * (x - 1.0 + mu),
            y - c1 * y - c2 * y,
            -c1 * z - c2 * z,
        ]
    )


def total_accel(position, params: SystemParams) -> np.ndarray:
    """Gravitational plus SRP acceleration at zero rotating-frame velocity."""
    return gravity_accel(position, params.mu) + srp_accel_components(position, params)


def eom_rhs(state, params: SystemParams) -> np.ndarray:
    """Time derivative of ``(x, y, z, vx, vy, vz)`` including Coriolis terms."""
    s = _as_state_array(state)
    acc = total_accel(s[:3], params)
    return np.array([s[3], s[4], s[5], acc[0] + 2.0 * s[4], acc[1] - 2.0 * s[3], acc[2]])


def gravity_hessian(position, mu: float) -> np.ndarray:
    x, y, z = np.asarray(position, dtype=float)
    d1 = np.array([x + mu, y, z])
    d2 = np.array([x - 1.0 + mu, y, z])
    r1 = np.linalg.norm(d1)
    r2 = np.linalg.norm(d2)
    eye = np.eye(3)
    hess = np.diag([1.0, 1.0, 0.0])
    hess -= (1.0 - mu) * (eye / r1**3 - 3.0 * np.outer(d1, d1) / r1**5)
    hess -= mu * (eye / r2**3 - 3.0 * np.outer(d2, d2) / r2**5)
    return hess


def srp_jacobian(position, params: SystemParams) -> np.ndarray:
    """Analytic Jacobian of the SRP acceleration with respect to position."""
    sx, y, z, r1, rxy = _check_sail_geometry(position, params)
    if params.srp_factor == 0.0:
        return np.zeros((3, 3))
    ca, sa, cg, sg = params.cos_alpha, params.sin_alpha, params.cos_gamma, params.sin_gamma
    r = np.array([sx, y, z])
    r_hat = r / r1
    eye = np.eye(3)
    dn = ca * (eye - np.outer(r_hat, r_hat)) / r1
    n = ca * r_hat
    if sa != 0.0:
        u = np.array([y, -sx, 0.0])
        du = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        drxy = np.array([sx, y, 0.0]) / rxy
        e1 = u / rxy
        de1 = du / rxy - np.outer(u, drxy) / rxy**2
        w = np.array([-sx * z, -y * z, rxy * rxy])
        dw = np.array([[-z, 0.0, -sx], [0.0, -z, -y], [2.0 * sx, 2.0 * y, 0.0]])
        s = rxy * r1
        ds = r1 * drxy + rxy * r_hat
        e2 = w / s
        de2 = dw / s - np.outer(w, ds) / s**2
        n = n + sa * sg * e1 + sa * cg * e2
        dn = dn + sa * sg * de1 + sa * cg * de2
    k = params.beta * (1.0 - params.mu) * ca**2
    return k * (dn / r1**2 - 2.0 * np.outer(n, r) / r1**4)


def accel_jacobian(position, params: SystemParams) -> np.ndarray:
    return gravity_hessian(position, params.mu) + srp_jacobian(position, params)


def effective_potential(position, params: SystemParams) -> float:
    """Classical effective potential ``Omega``."""
    x, y, z = np.asarray(position, dtype=float)
    r1, r2 = primary_distances(position, params.mu)
    return 0.5 * (x * x + y * y) + (1.0 - params.mu) / r1 + params.mu / r2


def augmented_potential(position, params: SystemParams) -> float:
    """``Omega* = Omega + a_SRP . r``; equals ``Omega`` when the SRP force vanishes."""
    base = effective_potential(position, params)
    if not params.srp_active:
        return base
    return base + float(np.dot(srp_accel_components(position, params), position))


def jacobi_constant(state, params: SystemParams) -> float:
    """``C = 2 Omega - v^2``. Only conserved when the SRP force is absent."""
    if params.srp_active:
        raise NotConservedError("Jacobi constant is not an integral of motion when beta > 0")
    s = _as_state_array(state)
    return 2.0 * effective_potential(s[:3], params) - float(np.dot(s[3:], s[3:]))


# ---------------------------------------------------------------------------
# Cancellation-free force differences about a reference point.
#
# Used to propagate in coordinates relative to an equilibrium, where
# total_accel(H + d) - total_accel(H) would otherwise lose all significant
# digits for |d| << |H|.


def _real(x) -> np.ndarray:
    """Float array, keeping ``longdouble`` input in extended precision."""
    arr = np.asarray(x)
    return arr if arr.dtype == np.longdouble else arr.astype(float)


def _inv_norm_diff(u, d, nu, nv, power):
    """``1/|u+d|^power - 1/|u|^power`` without cancellation (power = 1, 2 or 3)."""
    sq_diff = -(2.0 * np.dot(u, d) + np.dot(d, d))  # |u|^2 - |u+d|^2
    lin = sq_diff / (nu + nv)  # |u| - |u+d|
    if power == 1:
        return lin / (nu * nv)
    if power == 2:
        return sq_diff / (nu * nu * nv * nv)
    return lin * (nu * nu + nu * nv + nv * nv) / (nu**3 * nv**3)


def _unit_diff(u, d):
    """``(u+d)/|u+d| - u/|u|`` without cancellation."""
    v = u + d
    nu = np.sqrt(np.dot(u, u))
    nv = np.sqrt(np.dot(v, v))
    return d / nv + u * _inv_norm_diff(u, d, nu, nv, 1)


def accel_difference(reference, offset, params: SystemParams) -> np.ndarray:
    """``total_accel(reference + offset) - total_accel(reference)`` computed stably.

    Works in ``longdouble`` when either argument is ``longdouble``.
    """
    h = _real(reference)
    d = _real(offset)
    if h.dtype != d.dtype:
        h, d = h.astype(np.longdouble), d.astype(np.longdouble)
    mu = params.mu
    out = np.array([d[0], d[1], 0.0])
    # (x - 1) + mu keeps the small Earth offset exact; x - (1 - mu) would not
    to_sun = h.copy()
    to_sun[0] = h[0] + mu
    to_earth = h.copy()
    to_earth[0] = (h[0] - 1.0) + mu
    for mass, u in ((1.0 - mu, to_sun), (mu, to_earth)):
        v = u + d
        nu = np.sqrt(np.dot(u, u))
        nv = np.sqrt(np.dot(v, v))
        out -= mass * (d / nv**3 + u * _inv_norm_diff(u, d, nu, nv, 3))
    if params.srp_active:
        out += _srp_difference(h, d, params)
    return out


def _srp_difference(h, d, params: SystemParams) -> np.ndarray:
    ca, sa, cg, sg = params.cos_alpha, params.sin_alpha, params.cos_gamma, params.sin_gamma
    u = h + np.array([params.mu, 0.0, 0.0])
    v = u + d
    nu = np.sqrt(np.dot(u, u))
    nv = np.sqrt(np.dot(v, v))
    # n_hat(v) - n_hat(u), assembled from stable differences of each basis vector
    n_u = ca * u / nu
    dn = ca * _unit_diff(u, d)
    if sa != 0.0:
        uxy, dxy = np.array([u[0], u[1], 0.0]), np.array([d[0], d[1], 0.0])
        e1_u = np.array([u[1], -u[0], 0.0]) / np.hypot(u[0], u[1])
        de1 = _unit_diff(np.array([u[1], -u[0], 0.0]), np.array([d[1], -d[0], 0.0]))
        # e2 = (-x z, -y z, rxy^2)/(rxy r) = c_xy * (-z/r) + z_hat * rxy/r
        rxy_u = np.hypot(u[0], u[1])
        vxy = uxy + dxy
        rxy_v = np.hypot(vxy[0], vxy[1])
        cxy_u = uxy / rxy_u
        dcxy = _unit_diff(uxy, dxy)
        s_u = -u[2] / nu
        ds = -(d[2] / nv + u[2] * _inv_norm_diff(u, d, nu, nv, 1))
        # rxy/r difference
        q_u = rxy_u / nu
        drxy = (np.dot(2.0 * uxy + dxy, dxy)) / (rxy_u + rxy_v)
        dq = drxy / nv + rxy_u * _inv_norm_diff(u, d, nu, nv, 1)
        e2_u = cxy_u * s_u + np.array([0.0, 0.0, q_u])
        de2 = dcxy * (s_u + ds) + cxy_u * ds + np.array([0.0, 0.0, dq])
        n_u = n_u + sa * sg * e1_u + sa * cg * e2_u
        dn = dn + sa * sg * de1 + sa * cg * de2
    k = params.beta * (1.0 - params.mu) * ca**2
    # a = k n / r^2 ;  da = k (dn / |v|^2 + n_u * (1/|v|^2 - 1/|u|^2))
    return k * (dn / nv**2 + n_u * _inv_norm_diff(u, d, nu, nv, 2))
