"""
Classical Lagrange points and SRP-displaced (artificial) equilibrium points.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemParams, accel_jacobian, total_accel
from .errors import NoConvergenceError, SingularJacobianError

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


def _collinear_quintic(mu: float, index: int):
    """Coefficients (highest power first) of the distance polynomial for L1, L2 or L3."""
    if index == 1:
        return [1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu]
    if index == 2:
        return [1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu]
    return [1.0, 2.0 + mu, 1.0 + 2.0 * mu, -(1.0 - mu), -2.0 * (1.0 - mu), -(1.0 - mu)]


def classical_lagrange_point(mu: float, index: int) -> np.ndarray:
    """Position of the Lagrange point ``L{index}`` of the classical problem.

    Collinear points come from Newton iteration on the quintic in the distance
    to the nearer primary; triangular points are analytic.
    """
    if index not in (1, 2, 3, 4, 5):
        raise ValueError(f"Lagrange point index must be 1..5, got {index}")
    if index == 4:
        return np.array([0.5 - mu, math.sqrt(3.0) / 2.0, 0.0])
    if index == 5:
        return np.array([0.5 - mu, -math.sqrt(3.0) / 2.0, 0.0])

    coeffs = _collinear_quintic(mu, index)
    dcoeffs = np.polyder(coeffs)
    g = (mu / 3.0) ** (1.0 / 3.0) if index in (1, 2) else 1.0 - 7.0 * mu / 12.0
    for _ in range(100):
        step = np.polyval(coeffs, g) / np.polyval(dcoeffs, g)
        g -= step
        if abs(step) <= 1e-16 * max(1.0, abs(g)):
            break
    if index == 1:
        x = 1.0 - mu - g
    elif index == 2:
        x = 1.0 - mu + g
    else:
        x = -mu - g
    return np.array([x, 0.0, 0.0])


@dataclass(frozen=True)
class Aep:
    """An artificial equilibrium point and the parameters that generate it."""

    position: np.ndarray
    params: SystemParams
    residual_norm: float
    iterations: int = 0

    @property
    def gamma_vector(self) -> np.ndarray:
        """Vector from the equilibrium to the smaller primary."""
        hx, hy, hz = self.position
        return np.array([1.0 - hx - self.params.mu, -hy, -hz])

    @property
    def gamma_norm(self) -> float:
        return float(np.linalg.norm(self.gamma_vector))

    @property
    def r_l(self) -> float:
        """Distance from the larger primary."""
        hx, hy, hz = self.position
        return math.sqrt((hx + self.params.mu) ** 2 + hy * hy + hz * hz)

    def to_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "params": self.params.to_dict(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Aep":
        return cls(
            position=np.array(data["position"], dtype=float),
            params=SystemParams(**data["params"]),
            residual_norm=float(data["residual_norm"]),
            iterations=int(data.get("iterations", 0)),
        )


def find_aep(params: SystemParams, guess=None, *, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> Aep:
    """Solve ``grad Omega + a_SRP = 0`` by damped Newton iteration.

    The default guess is the classical L2 point. Once the residual drops below
    ``tol`` a few extra iterations polish the root to round-off.
    """
    x = classical_lagrange_point(params.mu, 2) if guess is None else np.array(guess, dtype=float)
    res = total_accel(x, params)
    rnorm = float(np.linalg.norm(res))
    polish = 0
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            polish += 1
            if polish > 3 or rnorm == 0.0:
                return Aep(x, params, rnorm, it - 1)
        jac = accel_jacobian(x, params)
        try:
            cond = np.linalg.cond(jac)
            if not np.isfinite(cond) or cond > 1e14:
                raise SingularJacobianError(f"Jacobian condition number {cond:.3e} at {x}")
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(str(exc)) from exc
        scale = 1.0
        for _ in range(30):
            trial = x + scale * step
            try:
                trial_res = total_accel(trial, params)
            except Exception:
                trial_res = None
            if trial_res is not None and np.all(np.isfinite(trial_res)):
                trial_norm = float(np.linalg.norm(trial_res))
                if trial_norm < rnorm or rnorm <= tol:
                    break
            scale *= 0.5
        else:
            if rnorm <= tol:
                return Aep(x, params, rnorm, it - 1)
            raise NoConvergenceError(f"line search failed at iteration {it}, residual {rnorm:.3e}")
        if rnorm <= tol and trial_norm >= rnorm:
            return Aep(x, params, rnorm, it)
        x, res, rnorm = trial, trial_res, trial_norm
    if rnorm <= tol:
        return Aep(x, params, rnorm, max_iter)
    raise NoConvergenceError(f"no convergence after {max_iter} iterations, residual {rnorm:.3e}")


@dataclass
class SweepCell:
    alpha: float
    gamma: float
    aep: Aep | None
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.aep is not None


@dataclass
class SweepResult:
    beta: float
    mu: float
    cells: list = field(default_factory=list)

    def grid(self, component: int) -> np.ndarray:
        alphas = sorted({c.alpha for c in self.cells})
        gammas = sorted({c.gamma for c in self.cells})
        out = np.full((len(gammas), len(alphas)), np.nan)
        ai = {a: i for i, a in enumerate(alphas)}
        gi = {g: i for i, g in enumerate(gammas)}
        for c in self.cells:
            if c.converged:
                out[gi[c.gamma], ai[c.alpha]] = c.aep.position[component]
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha_deg", "gamma_deg", "Hx", "Hy", "Hz", "residual", "converged"])
            for c in self.cells:
                if c.converged:
                    hx, hy, hz = (repr(float(v)) for v in c.aep.position)
                    res = repr(c.aep.residual_norm)
                else:
                    hx = hy = hz = res = "nan"
                w.writerow([repr(math.degrees(c.alpha)), repr(math.degrees(c.gamma)), hx, hy, hz, res, int(c.converged)])


def sweep_aep(beta: float, alphas, gammas, seed_index: int = 2, *, mu: float) -> SweepResult:
    """Continuation over an (alpha, gamma) grid, angles in radians.

    Each row of constant gamma is swept in increasing alpha. A cell is seeded
    from its converged left neighbour, else from the same alpha in the previous
    row, else from the classical Lagrange point. Failed cells are recorded and
    the sweep carries on.
    """
    alphas = np.asarray(alphas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if np.any(np.diff(alphas) <= 0) or np.any(np.diff(gammas) <= 0):
        raise ValueError("alpha and gamma grids must be strictly increasing")
    seed = classical_lagrange_point(mu, seed_index)
    result = SweepResult(beta=beta, mu=mu)
    prev_row: list = [None] * len(alphas)
    for gamma in gammas:
        row: list = []
        left = None
        for ia, alpha in enumerate(alphas):
            guess = left if left is not None else prev_row[ia] if prev_row[ia] is not None else seed
            try:
                aep = find_aep(SystemParams(mu, beta, float(alpha), float(gamma)), guess)
                cell = SweepCell(float(alpha), float(gamma), aep)
                left = aep.position
            except (NoConvergenceError, SingularJacobianError) as exc:
                log.warning("sweep cell alpha=%g gamma=%g failed: %s", alpha, gamma, exc)
                cell = SweepCell(float(alpha), float(gamma), None, str(exc))
                left = None
            row.append(cell.aep.position if cell.converged else None)
            result.cells.append(cell)
        prev_row = row
    return result
