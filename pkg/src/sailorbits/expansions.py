"""
Legendre-recurrence expansions of the gravity and sail accelerations about an
equilibrium, in scaled coordinates ``rho`` with ``X = H + |Gamma| rho``.

For an offset vector ``a`` with ``|a| = D``,

    1 / |rho - a| = (1 / D) sum_n T_n(rho),

where ``T_n`` is homogeneous of degree ``n`` and obeys the three-term
Legendre recurrence. ``R_n`` is the gradient of ``T_n``. The same recurrences
run on floats (validation) and on ``TrigSeries`` (the series solver).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SystemParams, accel_difference, total_accel
from .equilibria import Aep
from .errors import ConvergenceDomainError, DegenerateGeometryError
from .series import TrigSeries, mul


@dataclass(frozen=True)
class ExpansionConstants:
    """Scaled primary offsets and distances for one equilibrium."""

    a1: float
    a2: float
    b: float
    c: float
    d1: float
    d2: float
    dxy: float
    gamma_norm: float
    f: float
    mu: float
    hx: float
    hy: float
    cos_alpha: float
    sin_alpha: float
    cos_gamma: float
    sin_gamma: float

    @classmethod
    def from_aep(cls, aep: Aep) -> "ExpansionConstants":
        p = aep.params
        hx, hy, hz = (float(v) for v in aep.position)
        g = aep.gamma_norm
        a1 = -(hx + p.mu) / g
        a2 = (1.0 - hx - p.mu) / g
        b = -hy / g
        c = -hz / g
        return cls(
            a1=a1, a2=a2, b=b, c=c,
            d1=math.sqrt(a1 * a1 + b * b + c * c),
            d2=math.sqrt(a2 * a2 + b * b + c * c),
            dxy=math.hypot(a1, b),
            gamma_norm=g,
            f=p.srp_factor,
            mu=p.mu,
            hx=hx, hy=hy,
            cos_alpha=p.cos_alpha, sin_alpha=p.sin_alpha,
            cos_gamma=p.cos_gamma, sin_gamma=p.sin_gamma,
        )

    @property
    def larger_offset(self) -> tuple:
        return (self.a1, self.b, self.c)

    @property
    def smaller_offset(self) -> tuple:
        return (self.a2, self.b, self.c)

    @property
    def planar_offset(self) -> tuple:
        return (self.a1, self.b)

    @property
    def cube(self) -> float:
        return self.gamma_norm ** 3

    def check_planar(self) -> None:
        if self.dxy == 0.0 and self.sin_alpha != 0.0:
            raise DegenerateGeometryError("equilibrium lies on the axis through the larger primary")


# recurrences -----------------------------------------------------------------


def _times(a, b, max_order):
    if isinstance(a, TrigSeries) and isinstance(b, TrigSeries):
        return mul(a, b, max_order)
    return a * b


def _dot(weights, coords):
    total = None
    for w, q in zip(weights, coords):
        if w == 0.0:
            continue
        term = w * q
        total = term if total is None else total + term
    return total if total is not None else 0.0 * coords[0]


def legendre_sequence(coords, offset, d: float, n_max: int, *, gradient: bool = True, max_order: int | None = None):
    """``T_0..T_{n_max}`` and, if requested, ``R_0..R_{n_max}`` (one entry per coordinate).

    ``coords`` is a tuple of floats or of ``TrigSeries``; ``offset`` has the
    same length. Series products are truncated at ``max_order``.
    """
    d2 = d * d
    zero = 0.0 * coords[0]
    one = zero + 1.0
    u = _dot([o / d2 for o in offset], coords)
    r2 = None
    for q in coords:
        sq = _times(q, q, max_order)
        r2 = sq if r2 is None else r2 + sq
    r2 = r2 / d2

    T = [one, u]
    R = [[zero] * len(coords), [zero + o / d2 for o in offset]] if gradient else None
    for n in range(2, n_max + 1):
        c1 = (2.0 * n - 1.0) / n
        c2 = (n - 1.0) / n
        T.append(c1 * _times(u, T[n - 1], max_order) - c2 * _times(r2, T[n - 2], max_order))
        if gradient:
            row = []
            for axis, q in enumerate(coords):
                row.append(
                    c1 * ((offset[axis] / d2) * T[n - 1] + _times(u, R[n - 1][axis], max_order))
                    - c2 * ((2.0 / d2) * _times(q, T[n - 2], max_order) + _times(r2, R[n - 2][axis], max_order))
                )
            R.append(row)
    if n_max == 0:
        T = T[:1]
        R = R[:1] if gradient else None
    return T, R


def _check_domain(point, offset, d):
    rho = float(np.linalg.norm(point))
    if rho / d >= 1.0:
        raise ConvergenceDomainError(f"|rho|/D = {rho / d:.3g} >= 1, expansion diverges")


def legendre_T(n: int, point, offset, d: float):
    """``T_n`` at a numeric point (3-vector) or over a tuple of series."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if isinstance(point[0], TrigSeries):
        return legendre_sequence(tuple(point), offset, d, n, gradient=False)[0][n]
    point = np.asarray(point, dtype=float)
    _check_domain(point, offset, d)
    return float(legendre_sequence(tuple(point), offset, d, n, gradient=False)[0][n])


def legendre_R(n: int, axis: int, point, offset, d: float):
    """Partial derivative of ``T_n`` along coordinate ``axis``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(point[0], TrigSeries):
        return legendre_sequence(tuple(point), offset, d, n)[1][n][axis]
    point = np.asarray(point, dtype=float)
    _check_domain(point, offset, d)
    return float(legendre_sequence(tuple(point), offset, d, n)[1][n][axis])


def inverse_distance_sum(point, offset, d: float, n_max: int) -> float:
    """Partial sum ``(1/D) sum_{n<=n_max} T_n`` approximating ``1/|rho - offset|``."""
    point = np.asarray(point, dtype=float)
    _check_domain(point, offset, d)
    T, _ = legendre_sequence(tuple(point), offset, d, n_max, gradient=False)
    return float(sum(T)) / d


def tail_bound(point, d: float, n_max: int) -> float:
    ratio = float(np.linalg.norm(point)) / d
    return ratio ** (n_max + 1) / (d * (1.0 - ratio))


# gravity ----------------------------------------------------------------------


def grav_rhs_series(x: TrigSeries, y: TrigSeries, z: TrigSeries, consts: ExpansionConstants,
                    n_min: int = 3, n_max: int | None = None, max_order: int | None = None):
    """Scaled gravity terms ``sum_{n_min..n_max} [(1-mu)/D1 R_n^1 + mu/D2 R_n^2] / |Gamma|^3``."""
    coords = (x, y, z)
    if n_max is None:
        n_max = x.order + 1
    out = [TrigSeries.zero(x.order) for _ in range(3)]
    for weight, offset, d in (
        ((1.0 - consts.mu) / consts.d1, consts.larger_offset, consts.d1),
        (consts.mu / consts.d2, consts.smaller_offset, consts.d2),
    ):
        _, R = legendre_sequence(coords, offset, d, n_max, max_order=max_order)
        for n in range(max(n_min, 1), n_max + 1):
            for axis in range(3):
                out[axis] = out[axis] + (weight / consts.cube) * R[n][axis]
    return tuple(out)


def grav_rhs_numeric(point, consts: ExpansionConstants, n_min: int = 1, n_max: int = 8) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    total = np.zeros(3)
    for weight, offset, d in (
        ((1.0 - consts.mu) / consts.d1, consts.larger_offset, consts.d1),
        (consts.mu / consts.d2, consts.smaller_offset, consts.d2),
    ):
        _check_domain(point, offset, d)
        _, R = legendre_sequence(tuple(point), offset, d, n_max)
        for n in range(n_min, n_max + 1):
            total += weight * np.array(R[n], dtype=float)
    return total / consts.cube


# sail ---------------------------------------------------------------------------


def srp_order0(consts: ExpansionConstants) -> np.ndarray:
    """Constant term of the sail series, ``f g(-a1)`` in scaled form."""
    k = consts
    if k.f == 0.0:
        return np.zeros(3)
    k.check_planar()
    a1, b, c, d1, dxy = k.a1, k.b, k.c, k.d1, k.dxy
    tang = k.sin_alpha / dxy if k.sin_alpha != 0.0 else 0.0
    gx = (-a1 * k.cos_alpha / d1 - b * k.sin_gamma * tang - a1 * c * k.cos_gamma * tang / d1) / d1**2
    gy = (-b * k.cos_alpha / d1 + a1 * k.sin_gamma * tang - b * c * k.cos_gamma * tang / d1) / d1**2
    gz = (-c * k.cos_alpha + (a1 * a1 + b * b) * k.cos_gamma * tang) / d1**3
    return k.f * np.array([gx, gy, gz])


def srp_rhs_series(x: TrigSeries, y: TrigSeries, z: TrigSeries, consts: ExpansionConstants,
                   max_order: int | None = None):
    """Sail acceleration series ``f g(rho - a1)`` (unscaled by ``|Gamma|^3``) and its constant term.

    ``1/r1`` and ``1/r_xy`` are replaced by their Legendre sums; the cube and
    square are of the whole sum.
    """
    order = x.order
    zero = TrigSeries.zero(order)
    k = consts
    if k.f == 0.0:
        return (zero, zero, zero), np.zeros(3)
    k.check_planar()
    top = order if max_order is None else min(order, max_order)

    wx, wy, wz = x - k.a1, y - k.b, z - k.c
    T, _ = legendre_sequence((x, y, z), k.larger_offset, k.d1, top, gradient=False, max_order=top)
    inv_r = _sum_series(T, order) / k.d1
    inv_r2 = mul(inv_r, inv_r, top)
    inv_r3 = mul(inv_r2, inv_r, top)

    gx = k.cos_alpha * mul(wx, inv_r3, top)
    gy = k.cos_alpha * mul(wy, inv_r3, top)
    gz = k.cos_alpha * mul(wz, inv_r3, top)
    if k.sin_alpha != 0.0:
        Txy, _ = legendre_sequence((x, y), k.planar_offset, k.dxy, top, gradient=False, max_order=top)
        inv_rxy = _sum_series(Txy, order) / k.dxy
        if k.sin_gamma != 0.0:
            side = (k.sin_alpha * k.sin_gamma) * mul(inv_r2, inv_rxy, top)
            gx = gx + mul(wy, side, top)
            gy = gy - mul(wx, side, top)
        if k.cos_gamma != 0.0:
            lift = (k.sin_alpha * k.cos_gamma) * mul(inv_r3, inv_rxy, top)
            gx = gx - mul(mul(wz, wx, top), lift, top)
            gy = gy - mul(mul(wy, wz, top), lift, top)
            gz = gz + mul(mul(wx, wx, top) + mul(wy, wy, top), lift, top)
    return (k.f * gx, k.f * gy, k.f * gz), srp_order0(k)


def _sum_series(terms, order):
    total = TrigSeries.zero(order)
    for t in terms:
        total = total + t
    return total


def srp_rhs_numeric(point, consts: ExpansionConstants, n_max: int | None = None) -> np.ndarray:
    """``f g(rho - a1)`` directly (``n_max=None``) or with truncated Legendre sums."""
    k = consts
    if k.f == 0.0:
        return np.zeros(3)
    point = np.asarray(point, dtype=float)
    w = point - np.array(k.larger_offset)
    if n_max is None:
        inv_r = 1.0 / np.linalg.norm(w)
        inv_rxy = 1.0 / math.hypot(w[0], w[1]) if k.sin_alpha != 0.0 else 0.0
    else:
        inv_r = inverse_distance_sum(point, k.larger_offset, k.d1, n_max)
        inv_rxy = (inverse_distance_sum(point[:2], k.planar_offset, k.dxy, n_max)
                   if k.sin_alpha != 0.0 else 0.0)
    ca, sa, cg, sg = k.cos_alpha, k.sin_alpha, k.cos_gamma, k.sin_gamma
    g = ca * w * inv_r**3
    g = g + sa * sg * np.array([w[1], -w[0], 0.0]) * inv_r**2 * inv_rxy
    g = g + sa * cg * np.array([-w[2] * w[0], -w[1] * w[2], w[0] ** 2 + w[1] ** 2]) * inv_r**3 * inv_rxy
    return k.f * g


def g_gradient(aep: Aep, params: SystemParams | None = None) -> np.ndarray:
    """Gradient of the sail's generalized-force potential at the equilibrium (physical units)."""
    p = aep.params if params is None else params
    hx, hy, hz = (float(v) for v in aep.position)
    if p.srp_factor == 0.0:
        return np.zeros(3)
    rl = aep.r_l
    rxy = math.hypot(hx + p.mu, hy)
    if rl == 0.0 or (rxy == 0.0 and p.sin_alpha != 0.0):
        raise DegenerateGeometryError("equilibrium on the axis through the larger primary")
    ca, sa, cg, sg = p.cos_alpha, p.sin_alpha, p.cos_gamma, p.sin_gamma
    lead = p.beta * (p.mu - 1.0) * ca * ca / rl**2
    tang = sa / rxy if sa != 0.0 else 0.0
    gx = lead * ((hx + p.mu) * ca / rl - hz * (hx + p.mu) * cg * tang / rl + hy * sg * tang)
    gy = lead * (hy * ca / rl - hy * hz * cg * tang / rl - (hx + p.mu) * sg * tang)
    gz = lead / rl * (hz * ca + rxy * cg * sa)
    return np.array([gx, gy, gz])


# full translated field -----------------------------------------------------------


def translated_rhs_series(x: TrigSeries, y: TrigSeries, z: TrigSeries, consts: ExpansionConstants,
                          max_order: int | None = None):
    """Series of ``total_accel(H + |Gamma| rho) / |Gamma|`` including every order."""
    order = x.order
    top = order if max_order is None else min(order, max_order)
    grav = grav_rhs_series(x, y, z, consts, n_min=1, n_max=top + 1, max_order=top)
    srp, _ = srp_rhs_series(x, y, z, consts, max_order=top)
    spin = (x + consts.hx / consts.gamma_norm, y + consts.hy / consts.gamma_norm, TrigSeries.zero(order))
    return tuple((spin[a] + grav[a] + srp[a] / consts.cube).truncate(top) for a in range(3))


def translated_rhs(rho, aep: Aep) -> np.ndarray:
    """Exact translated field at scaled offset ``rho``, free of the cancellation in ``H + |Gamma| rho``."""
    g = aep.gamma_norm
    base = total_accel(aep.position, aep.params)
    return (base + accel_difference(aep.position, g * np.asarray(rho, dtype=float), aep.params)) / g
