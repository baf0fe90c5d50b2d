"""
Order-by-order Lindstedt-Poincare construction of the coordinate and
frequency series about an equilibrium.

At order ``n`` every coefficient block ``(i, j, k, m; p, q)`` with
``i + j + k + m = n`` satisfies

    M X + delta * (frequency correction) = b,

where ``M`` is the linear operator acting on one harmonic, and ``b`` collects
everything already known: the nonlinear field evaluated on the lower-order
series minus the inertial terms produced by the lower-order frequency
corrections. Blocks resonant with a linear mode get one extra unknown, a
frequency correction of order ``n - 1``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .equilibria import Aep
from .errors import IllConditionedError, ResidualTooLargeError
from .expansions import ExpansionConstants, translated_rhs_series
from .linearization import LinearModel, linear_model
from .series import Frequencies, FrequencySeries, TrigSeries, ddt, dump_json, monomial_basis

log = logging.getLogger(__name__)

RCOND = 1e-12
RESIDUAL_LIMIT = 1e-9
COND_LIMIT = 1e12
FORMAT_VERSION = 1


@dataclass
class BuildDiagnostics:
    orders: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def order_entry(self, n: int) -> dict:
        return self.orders.setdefault(n, {"blocks": 0, "resonant": 0, "max_residual": 0.0, "max_cond": 0.0})

    def to_dict(self) -> dict:
        return {"orders": {str(n): v for n, v in sorted(self.orders.items())}, "warnings": list(self.warnings)}


@dataclass
class SeriesSolution:
    x: TrigSeries
    y: TrigSeries
    z: TrigSeries
    vx: TrigSeries
    vy: TrigSeries
    vz: TrigSeries
    freqs: Frequencies
    order: int
    aep: Aep
    linear: LinearModel | None = None
    diagnostics: BuildDiagnostics = field(default_factory=BuildDiagnostics)

    @property
    def params(self):
        return self.aep.params

    @property
    def position_series(self):
        return (self.x, self.y, self.z)

    @property
    def velocity_series(self):
        return (self.vx, self.vy, self.vz)

    def evaluate(self, amplitudes, phases=(0.0, 0.0), t=0.0) -> np.ndarray:
        """Scaled equilibrium-relative state(s): shape ``(6,)`` or ``(6, len(t))``."""
        return np.array([s.evaluate(self.freqs, amplitudes, phases, t) for s in (*self.position_series, *self.velocity_series)])

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "order": self.order,
            "aep": self.aep.to_dict(),
            "series": {name: getattr(self, name).to_dict() for name in ("x", "y", "z", "vx", "vy", "vz")},
            "frequencies": self.freqs.to_dict(),
            "linear": None if self.linear is None else self.linear.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
        }

    def save(self, path) -> None:
        dump_json(self.to_dict(), path)

    @classmethod
    def from_dict(cls, data: dict) -> "SeriesSolution":
        aep = Aep.from_dict(data["aep"])
        series = {name: TrigSeries.from_dict(data["series"][name]) for name in ("x", "y", "z", "vx", "vy", "vz")}
        diag = BuildDiagnostics(
            orders={int(n): v for n, v in data.get("diagnostics", {}).get("orders", {}).items()},
            warnings=list(data.get("diagnostics", {}).get("warnings", [])),
        )
        return cls(
            **series,
            freqs=Frequencies.from_dict(data["frequencies"]),
            order=int(data["order"]),
            aep=aep,
            linear=None,
            diagnostics=diag,
        )

    @classmethod
    def load(cls, path) -> "SeriesSolution":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# initialization -------------------------------------------------------------


def initialize(linear: LinearModel, order: int) -> SeriesSolution:
    """Zeroth- and first-order content taken straight from the linear model."""
    k = linear.k
    rows = {
        "x": [((1, 0, 0, 0, 0, 0), 1.0, 0.0), ((0, 1, 0, 0, 0, 0), 1.0, 0.0), ((0, 0, 1, 0, 1, 0), 1.0, k[14]),
              ((0, 0, 0, 1, 0, 1), k[5], k[6]), ((0, 0, 0, 0, 0, 0), k[15], 0.0)],
        "y": [((1, 0, 0, 0, 0, 0), k[1], 0.0), ((0, 1, 0, 0, 0, 0), k[2], 0.0), ((0, 0, 1, 0, 1, 0), k[7], k[8]),
              ((0, 0, 0, 1, 0, 1), k[9], k[10]), ((0, 0, 0, 0, 0, 0), k[16], 0.0)],
        "z": [((1, 0, 0, 0, 0, 0), k[3], 0.0), ((0, 1, 0, 0, 0, 0), k[4], 0.0), ((0, 0, 1, 0, 1, 0), k[11], k[12]),
              ((0, 0, 0, 1, 0, 1), 1.0, k[13]), ((0, 0, 0, 0, 0, 0), k[17], 0.0)],
    }
    coords = {name: TrigSeries.from_terms(order, terms) for name, terms in rows.items()}
    freqs = Frequencies.constant(order, linear.omega_0, linear.nu_0, linear.lambda_0)
    vel = [ddt(coords[n], freqs) for n in ("x", "y", "z")]
    return SeriesSolution(coords["x"], coords["y"], coords["z"], *vel, freqs=freqs, order=order,
                          aep=linear.aep, linear=linear)


# per-block linear algebra ---------------------------------------------------


def assemble_M(indices, omega_star: np.ndarray, lambda_0: float, omega_0: float, nu_0: float) -> np.ndarray:
    """Operator on ``(x, x_bar, y, y_bar, z, z_bar)`` for one ``e^{zeta t}(cos, sin)(Psi t)`` block."""
    i, j, _, _, p, q = indices
    psi = p * omega_0 + q * nu_0
    zeta = (i - j) * lambda_0
    xi = zeta * zeta - psi * psi
    zp = 2.0 * zeta * psi
    K = omega_star
    return np.array([
        [xi - K[0, 0], zp, -2 * zeta - K[0, 1], -2 * psi, -K[0, 2], 0.0],
        [-zp, xi - K[0, 0], 2 * psi, -2 * zeta - K[0, 1], 0.0, -K[0, 2]],
        [2 * zeta - K[1, 0], 2 * psi, xi - K[1, 1], zp, -K[1, 2], 0.0],
        [-2 * psi, 2 * zeta - K[1, 0], -zp, xi - K[1, 1], 0.0, -K[1, 2]],
        [-K[2, 0], 0.0, -K[2, 1], 0.0, xi - K[2, 2], zp],
        [0.0, -K[2, 0], 0.0, -K[2, 1], -zp, xi - K[2, 2]],
    ])


def delta_vector(case: str, k: np.ndarray, lambda_0: float, omega_0: float, nu_0: float) -> np.ndarray:
    """Column multiplying the frequency correction in the resonant cases."""
    if case == "grow":
        return np.array([2 * (lambda_0 - k[1]), 0.0, 2 * (k[1] * lambda_0 + 1), 0.0, 2 * k[3] * lambda_0, 0.0])
    if case == "decay":
        return np.array([2 * (lambda_0 + k[2]), 0.0, 2 * (k[2] * lambda_0 - 1), 0.0, 2 * k[4] * lambda_0, 0.0])
    if case == "omega":
        return np.array([-2 * (k[8] + omega_0), 2 * (k[7] - k[14] * omega_0), 2 * (k[14] - k[7] * omega_0),
                         -2 * (k[8] * omega_0 + 1), -2 * k[11] * omega_0, -2 * k[12] * omega_0])
    if case == "nu":
        return np.array([-2 * (k[5] * nu_0 + k[10]), -2 * (k[6] * nu_0 - k[9]), -2 * (k[9] * nu_0 - k[6]),
                         -2 * (k[10] * nu_0 + k[5]), -2 * nu_0, -2 * k[13] * nu_0])
    raise ValueError(f"unknown resonance case {case!r}")


def classify_block(indices) -> tuple[str, tuple] | None:
    """Resonance case and the frequency index it determines, or ``None``."""
    i, j, k, m, p, q = indices
    if p == 0 and q == 0 and i - 1 == j and i >= 1:
        return "grow", (i - 1, j, k, m)
    if p == 0 and q == 0 and j - 1 == i and j >= 1:
        return "decay", (i, j - 1, k, m)
    if p == 1 and q == 0 and i == j and k >= 1:
        return "omega", (i, i, k - 1, m)
    if p == 0 and q == 1 and i == j and m >= 1:
        return "nu", (i, i, k, m - 1)
    return None


def _lstsq(A: np.ndarray, b: np.ndarray):
    """Minimum-norm solution and its residual relative to ``max(1, |b|)``."""
    sol, *_ = np.linalg.lstsq(A, b, rcond=RCOND)
    return sol, float(np.linalg.norm(A @ sol - b)) / max(1.0, float(np.linalg.norm(b)))


# known terms ---------------------------------------------------------------


def inertial_terms(x: TrigSeries, y: TrigSeries, z: TrigSeries, freqs: Frequencies, max_order: int | None = None):
    """Left-hand side ``(x'' - 2y', y'' + 2x', z'')`` for the given series and rates."""
    vx, vy, vz = (ddt(s, freqs, max_order) for s in (x, y, z))
    ax, ay, az = (ddt(s, freqs, max_order) for s in (vx, vy, vz))
    return ax - 2.0 * vy, ay + 2.0 * vx, az


def known_terms(solution: SeriesSolution, n: int):
    """Order-``n`` part of field minus inertia, as three complex coefficient arrays over the degree-``n`` monomials."""
    consts = ExpansionConstants.from_aep(solution.aep)
    coords = solution.position_series
    field_ = translated_rhs_series(*coords, consts, max_order=n)
    inertia = inertial_terms(*coords, solution.freqs, max_order=n)
    sl = monomial_basis(solution.order).degree_slice(n)
    return tuple((f.coeffs[sl] - a.coeffs[sl]) for f, a in zip(field_, inertia))


def _block_rhs(B, local: int, p: int, q: int, order: int) -> np.ndarray:
    out = np.zeros(6)
    for axis in range(3):
        val = B[axis][local, order + p, order + q]
        if p == 0 and q == 0:
            out[2 * axis] = val.real
        else:
            out[2 * axis] = 2.0 * val.real
            out[2 * axis + 1] = -2.0 * val.imag
    return out


def _store(arrays, mono: int, p: int, q: int, order: int, X: np.ndarray) -> None:
    for axis in range(3):
        c, s = X[2 * axis], X[2 * axis + 1]
        if p == 0 and q == 0:
            arrays[axis][mono, order, order] = c
        else:
            arrays[axis][mono, order + p, order + q] = 0.5 * complex(c, -s)
            arrays[axis][mono, order - p, order - q] = 0.5 * complex(c, s)


def solve_order(n: int, solution: SeriesSolution, linear: LinearModel, *, strict: bool = False) -> SeriesSolution:
    """Solve every order-``n`` block and the order-``n-1`` frequency corrections they fix."""
    order = solution.order
    basis = monomial_basis(order)
    sl = basis.degree_slice(n)
    B = known_terms(solution, n)
    diag = solution.diagnostics.order_entry(n)
    k = linear.k
    l0, w0, n0 = linear.lambda_0, linear.omega_0, linear.nu_0
    K = linear.omega_star

    support = np.any(np.stack([np.abs(b) for b in B]) > 0, axis=0)  # (local, P, Q)
    blocks = []
    for local, mono in enumerate(range(sl.start, sl.stop)):
        i, j, kk, m = (int(e) for e in basis.exponents[mono])
        for p in range(0, order + 1):
            for q in range(-order if p > 0 else 0, order + 1):
                idx = (i, j, kk, m, p, q)
                if support[local, order + p, order + q] or classify_block(idx) is not None:
                    blocks.append((local, mono, idx))
    blocks.sort(key=lambda item: item[2])

    coords = [np.array(s.coeffs) for s in solution.position_series]
    rates = {"omega": np.array(solution.freqs.omega.coeffs), "nu": np.array(solution.freqs.nu.coeffs),
             "lam": np.array(solution.freqs.lam.coeffs)}

    # the growing and decaying blocks built on the same lambda index share one unknown
    hyperbolic = {}
    for local, mono, idx in blocks:
        case = classify_block(idx)
        if case is not None and case[0] in ("grow", "decay"):
            hyperbolic.setdefault(case[1], {})[case[0]] = (local, mono, idx)

    done = set()
    for local, mono, idx in blocks:
        if idx in done:
            continue
        case = classify_block(idx)
        M = assemble_M(idx, K, l0, w0, n0)
        b = _block_rhs(B, local, idx[4], idx[5], order)
        diag["blocks"] += 1
        if case is None:
            cond = np.linalg.cond(M)
            diag["max_cond"] = max(diag["max_cond"], float(cond))
            if cond > COND_LIMIT:
                msg = f"order {n} block {idx}: condition number {cond:.3e}"
                log.warning(msg)
                solution.diagnostics.warnings.append(msg)
                if strict:
                    raise IllConditionedError(msg)
            X, res = _lstsq(M, b)
            _store(coords, mono, idx[4], idx[5], order, X)
            _record_residual(solution, diag, n, idx, res, strict)
            done.add(idx)
            continue

        diag["resonant"] += 1
        kind, freq_idx = case
        if kind in ("grow", "decay"):
            members = hyperbolic[freq_idx]
            parts = [(name, members[name]) for name in ("grow", "decay") if name in members]
            rows = 6 * len(parts)
            A = np.zeros((rows, rows + 1))
            rhs = np.zeros(rows)
            for slot, (name, (loc, _, bidx)) in enumerate(parts):
                A[6 * slot:6 * slot + 6, 6 * slot:6 * slot + 6] = assemble_M(bidx, K, l0, w0, n0)
                A[6 * slot:6 * slot + 6, -1] = delta_vector(name, k, l0, w0, n0)
                rhs[6 * slot:6 * slot + 6] = _block_rhs(B, loc, 0, 0, order)
            sol, res = _lstsq(A, rhs)
            plain, plain_res = _lstsq(A[:, :-1], rhs)
            if plain_res < res and res - plain_res > 1e-14:
                sol, res = np.append(plain, 0.0), plain_res
            for slot, (name, (_, bmono, bidx)) in enumerate(parts):
                _store(coords, bmono, 0, 0, order, sol[6 * slot:6 * slot + 6])
                done.add(bidx)
            rates["lam"][basis.of(freq_idx)] = sol[-1]
        else:
            A = np.column_stack([M, delta_vector(kind, k, l0, w0, n0)])
            sol, res = _lstsq(A, b)
            plain, plain_res = _lstsq(M, b)
            if plain_res < res and res - plain_res > 1e-14:
                sol, res = np.append(plain, 0.0), plain_res
            _store(coords, mono, idx[4], idx[5], order, sol[:6])
            rates[kind][basis.of(freq_idx)] = sol[6]
            done.add(idx)
        _record_residual(solution, diag, n, idx, res, strict)

    freqs = Frequencies(FrequencySeries(order, rates["omega"]), FrequencySeries(order, rates["nu"]),
                        FrequencySeries(order, rates["lam"]))
    x, y, z = (TrigSeries(order, c) for c in coords)
    return SeriesSolution(x, y, z, solution.vx, solution.vy, solution.vz, freqs=freqs, order=order,
                          aep=solution.aep, linear=linear, diagnostics=solution.diagnostics)


def _record_residual(solution, diag, n, idx, res, strict):
    diag["max_residual"] = max(diag["max_residual"], float(res))
    if res > RESIDUAL_LIMIT:
        msg = f"order {n} block {idx}: relative least-squares residual {res:.3e}"
        log.warning(msg)
        solution.diagnostics.warnings.append(msg)
        if strict:
            raise ResidualTooLargeError(msg)


def build(aep: Aep, order: int, *, strict: bool = False, linear: LinearModel | None = None) -> SeriesSolution:
    """Series solution of the given order about ``aep``."""
    if order < 1:
        raise ValueError("series order must be at least 1")
    linear = linear_model(aep) if linear is None else linear
    sol = initialize(linear, order)
    for n in range(2, order + 1):
        sol = solve_order(n, sol, linear, strict=strict)
    vel = [ddt(s, sol.freqs) for s in sol.position_series]
    return SeriesSolution(*sol.position_series, *vel, freqs=sol.freqs, order=order, aep=aep, linear=linear,
                          diagnostics=sol.diagnostics)
