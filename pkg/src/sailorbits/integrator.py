"""
Adaptive Dormand-Prince 5(4) propagation of the full equations of motion.

Two frames are offered. ``barycentric`` integrates the absolute state.
``relative`` integrates the offset from an equilibrium ``H`` and evaluates the
force as a cancellation-free difference about ``H``; ``H`` is treated as an
exact root. Both describe the same motion. The relative frame keeps the
error proportional to the size of the excursion rather than to ``|H|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import OdeSolution, RK45

from .dynamics import SystemParams, accel_difference, eom_rhs
from .errors import MaxStepsExceededError, StepSizeUnderflowError

# scipy's embedded pair refuses relative tolerances below 100 ulp
REL_TOL_FLOOR = 100 * np.finfo(float).eps
ABS_TOL_FLOOR = 1e-14
EXTENDED_REL_TOL_FLOOR = float(100 * np.finfo(np.longdouble).eps)


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-14
    max_step: float = np.inf
    max_steps: int = 200_000
    dense_output: bool = True
    extended: bool = False  # long-double Dormand-Prince; no dense output

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    def effective_tolerances(self, state_scale: float = 1.0) -> tuple[float, float]:
        """Tolerances clipped to what double precision can honour.

        The absolute floor is ``1e-14`` per unit of state magnitude, so it
        tightens for the small offsets of the relative frame.
        """
        if self.extended:
            floor = EXTENDED_REL_TOL_FLOOR
            return max(self.abs_tol, floor * state_scale), max(self.rel_tol, floor)
        return max(self.abs_tol, ABS_TOL_FLOOR * state_scale), max(self.rel_tol, REL_TOL_FLOOR)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n, 6)
    interpolant: OdeSolution | None
    frame: str
    reference: np.ndarray | None
    n_steps: int
    n_evaluations: int = 0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, t) -> np.ndarray:
        if self.interpolant is None:
            raise ValueError("trajectory was propagated without dense output")
        return self.interpolant(t)

    def barycentric(self, state) -> np.ndarray:
        """Convert a state of this trajectory's frame to barycentric."""
        state = np.array(state, dtype=float)
        if self.frame == "relative":
            state[..., :3] = state[..., :3] + self.reference
        return state


def relative_rhs(reference: np.ndarray, params: SystemParams):
    ref = np.asarray(reference, dtype=float)

    def rhs(_t, s):
        acc = accel_difference(ref, s[:3], params)
        return np.array([s[3], s[4], s[5], acc[0] + 2.0 * s[4], acc[1] - 2.0 * s[3], acc[2]])

    return rhs


def propagate(state0, params: SystemParams, t_span, config: IntegratorConfig | None = None, *,
              frame: str = "barycentric", reference=None) -> Trajectory:
    """Integrate from ``t_span[0]`` to exactly ``t_span[1]`` (either direction).

    In the relative frame ``state0`` is the offset from ``reference``.
    """
    config = IntegratorConfig() if config is None else config
    t0, t1 = (float(v) for v in t_span)
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ValueError("time span must be finite")
    y0 = np.asarray(state0, dtype=float).reshape(6)
    if frame == "barycentric":
        fun = lambda _t, s: eom_rhs(s, params)  # noqa: E731
        ref = None
    elif frame == "relative":
        if reference is None:
            raise ValueError("relative frame needs a reference point")
        ref = np.asarray(reference, dtype=float)
        fun = relative_rhs(ref, params)
    else:
        raise ValueError(f"unknown frame {frame!r}")

    scale = float(np.max(np.abs(y0))) or 1.0
    atol, rtol = config.effective_tolerances(min(scale, 1.0))
    if t0 == t1:
        return Trajectory(np.array([t0]), y0[None, :], None, frame, ref, 0)
    if config.extended:
        if frame != "relative":
            raise ValueError("extended precision is only wired for the relative frame")
        return _propagate_extended(fun, t0, t1, y0, atol, rtol, config, frame, ref)

    solver = RK45(fun, t0, y0, t1, max_step=config.max_step, rtol=rtol, atol=atol)
    ts, ys, interps = [t0], [y0.copy()], []
    steps = 0
    while solver.status == "running":
        if steps >= config.max_steps:
            raise MaxStepsExceededError(f"more than {config.max_steps} steps before t={t1}")
        message = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflowError(f"integration failed at t={solver.t}: {message}")
        steps += 1
        ts.append(solver.t)
        ys.append(solver.y.copy())
        if config.dense_output:
            interps.append(solver.dense_output())
    t_arr = np.array(ts)
    interp = OdeSolution(t_arr, interps) if config.dense_output else None
    return Trajectory(t_arr, np.array(ys), interp, frame, ref, steps, solver.nfev)


# Dormand-Prince 5(4) tableau, kept as exact rationals until cast
_DP_C = [(0, 1), (1, 5), (3, 10), (4, 5), (8, 9), (1, 1), (1, 1)]
_DP_A = [
    [],
    [(1, 5)],
    [(3, 40), (9, 40)],
    [(44, 45), (-56, 15), (32, 9)],
    [(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
    [(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656)],
    [(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
]
_DP_E = [(71, 57600), (0, 1), (-71, 16695), (71, 1920), (-17253, 339200), (22, 525), (-1, 40)]


def _ld(frac):
    return np.longdouble(frac[0]) / np.longdouble(frac[1])


_C = [_ld(c) for c in _DP_C]
_A = [[_ld(a) for a in row] for row in _DP_A]
_E = [_ld(e) for e in _DP_E]


def _propagate_extended(fun, t0, t1, y0, atol, rtol, config, frame, ref) -> Trajectory:
    """Dormand-Prince 5(4) in ``longdouble`` with the usual PI-free step controller."""
    ld = np.longdouble
    y = y0.astype(ld)
    t, tend = ld(t0), ld(t1)
    direction = 1 if t1 > t0 else -1
    span = abs(tend - t)
    atol, rtol = ld(atol), ld(rtol)

    def f(tt, yy):
        return np.asarray(fun(tt, yy), dtype=ld)

    k1 = f(t, y)
    nfev = 1
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2))
    h = ld(1e-6) if d0 < 1e-5 or d1 < 1e-5 else ld(0.01) * d0 / d1
    h = min(h, span)

    ts, ys = [float(t)], [y.astype(float)]
    steps = 0
    while direction * (tend - t) > 0:
        if steps >= config.max_steps:
            raise MaxStepsExceededError(f"more than {config.max_steps} steps before t={t1}")
        h = min(h, abs(tend - t), ld(config.max_step))
        if h <= 10 * np.finfo(ld).eps * max(abs(t), ld(1)):
            raise StepSizeUnderflowError(f"step size underflow at t={float(t)}")
        hs = direction * h
        k = [k1]
        for i in range(1, 7):
            yi = y + hs * sum(a * kj for a, kj in zip(_A[i], k))
            k.append(f(t + _C[i] * hs, yi))
        nfev += 6
        y_new = yi  # last stage row equals the fifth-order weights
        err = hs * sum(e * kj for e, kj in zip(_E, k))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm <= 1.0:
            t = tend if h == abs(tend - t) else t + hs
            y = y_new
            k1 = k[6]
            steps += 1
            ts.append(float(t))
            ys.append(y.astype(float))
            factor = 10.0 if err_norm == 0.0 else min(10.0, 0.9 * err_norm ** -0.2)
        else:
            factor = max(0.2, 0.9 * err_norm ** -0.2)
        h = h * ld(factor)
    return Trajectory(np.array(ts), np.array(ys), None, frame, ref, steps, nfev)
