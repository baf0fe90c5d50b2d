"""
Linear model about an equilibrium: stiffness matrix, constant forcing,
eigenstructure, mode-shape coefficients, and the closed-form linear solution.

The variational equations in scaled coordinates read

    x'' - 2 y' = (K r)_x + forcing_x,  y'' + 2 x' = (K r)_y + forcing_y,  z'' = (K r)_z + forcing_z

with ``K`` (``omega_star``) the Jacobian of the translated field at the origin.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemParams
from .equilibria import Aep
from .errors import SingularOmegaStarError, StructureViolationError, ZeroNormalizationComponentError
from .expansions import ExpansionConstants, g_gradient, srp_order0, translated_rhs_series
from .series import TrigSeries

log = logging.getLogger(__name__)

REAL_TOL = 1e-10
DAMPING_GATE = 1e-3

CORIOLIS = np.array([[0.0, 2.0, 0.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def omega_star_matrix(aep: Aep, params: SystemParams | None = None) -> np.ndarray:
    """Jacobian of the translated field at the origin, read off an order-1 series expansion.

    Each coordinate is represented by its own formal amplitude, so the
    coefficient of that amplitude in each component is one Jacobian column.
    """
    if params is not None and params != aep.params:
        aep = Aep(aep.position, params, aep.residual_norm, aep.iterations)
    consts = ExpansionConstants.from_aep(aep)
    unit = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)]
    coords = [TrigSeries.term(1, e) for e in unit]
    rhs = translated_rhs_series(*coords, consts)
    out = np.empty((3, 3))
    for row in range(3):
        for col, e in enumerate(unit):
            out[row, col] = rhs[row].get(*e)[0]
    return out


def constant_forcing(aep: Aep, params: SystemParams | None = None) -> np.ndarray:
    """Constant term of the variational equations: sail potential gradient plus the sail series constant.

    The gradient is in physical units, so it carries ``|Gamma|^2`` to share the
    scaled series' units before the common ``1/|Gamma|^3`` factor.
    """
    if params is not None and params != aep.params:
        aep = Aep(aep.position, params, aep.residual_norm, aep.iterations)
    consts = ExpansionConstants.from_aep(aep)
    if consts.f == 0.0:
        return np.zeros(3)
    return (consts.gamma_norm**2 * g_gradient(aep) + srp_order0(consts)) / consts.cube


def system_matrix(omega_star: np.ndarray) -> np.ndarray:
    top = np.hstack([np.zeros((3, 3)), np.eye(3)])
    bottom = np.hstack([omega_star, CORIOLIS])
    return np.vstack([top, bottom])


def characteristic_polynomial(omega_star: np.ndarray) -> np.ndarray:
    return np.poly(system_matrix(omega_star))


@dataclass(frozen=True)
class ModalData:
    lambda_plus: float
    lambda_minus: float
    omega: complex
    nu: complex
    vec_plus: np.ndarray
    vec_minus: np.ndarray
    vec_omega: np.ndarray
    vec_nu: np.ndarray
    roots: np.ndarray

    @property
    def lambda_0(self) -> float:
        return 0.5 * (self.lambda_plus - self.lambda_minus)

    @property
    def lambda_asymmetry(self) -> float:
        return self.lambda_plus + self.lambda_minus


def _in_plane_share(vec: np.ndarray) -> float:
    pos = np.abs(vec[:3]) ** 2
    return float((pos[0] + pos[1]) / pos.sum())


def eigenstructure(omega_star: np.ndarray) -> ModalData:
    """Split the six roots into a real saddle pair and two oscillatory pairs.

    The oscillatory pair whose eigenvector is mostly in-plane is the
    ``omega`` mode; if both are equally in-plane, the faster one is.
    """
    vals, vecs = np.linalg.eig(system_matrix(omega_star))
    scale = max(1.0, float(np.max(np.abs(vals))))
    real_idx = [n for n in range(6) if abs(vals[n].imag) <= REAL_TOL * scale]
    if len(real_idx) != 2:
        raise StructureViolationError(f"expected two real roots, found {len(real_idx)}: {vals}")
    r0, r1 = sorted(real_idx, key=lambda n: vals[n].real, reverse=True)
    lam_p, lam_m = vals[r0].real, vals[r1].real
    if not (lam_p > 0.0 > lam_m):
        raise StructureViolationError(f"real roots {lam_p}, {lam_m} are not a saddle pair")
    upper = [n for n in range(6) if vals[n].imag > REAL_TOL * scale]
    lower = [n for n in range(6) if vals[n].imag < -REAL_TOL * scale]
    if len(upper) != 2 or len(lower) != 2:
        raise StructureViolationError(f"expected two complex-conjugate pairs: {vals}")
    for n in upper:
        if min(abs(vals[n] - np.conj(vals[m])) for m in lower) > 1e-8 * scale:
            raise StructureViolationError(f"root {vals[n]} has no conjugate partner")

    share = {n: _in_plane_share(vecs[:, n]) for n in upper}
    a, b = upper
    if abs(share[a] - share[b]) < 1e-6:
        w_idx, n_idx = (a, b) if abs(vals[a].imag) >= abs(vals[b].imag) else (b, a)
    else:
        w_idx, n_idx = (a, b) if share[a] > share[b] else (b, a)

    # in-plane modes are pinned by x, the out-of-plane one by z
    w_pos, n_pos = vecs[:3, w_idx], vecs[:3, n_idx]
    n_axis = 2 if abs(n_pos[2]) > 1e-12 * np.max(np.abs(n_pos)) else 0
    return ModalData(
        lambda_plus=refine_root(float(lam_p), omega_star, 0),
        lambda_minus=refine_root(float(lam_m), omega_star, 0),
        omega=refine_root(complex(vals[w_idx]), omega_star, 0 if abs(w_pos[0]) > 0 else 1),
        nu=refine_root(complex(vals[n_idx]), omega_star, n_axis),
        vec_plus=np.real(vecs[:, r0]),
        vec_minus=np.real(vecs[:, r1]),
        vec_omega=vecs[:, w_idx].copy(),
        vec_nu=vecs[:, n_idx].copy(),
        roots=vals.copy(),
    )


def _pencil_solve(root, omega_star: np.ndarray, axis: int):
    """Mode vector with ``v[axis] = 1`` from two rows of ``(s^2 I - s C - K) v = 0``, plus the leftover row.

    Runs in extended precision; the 2x2 solve is written out because LAPACK
    has no long-double path.
    """
    cl = np.clongdouble
    s = cl(root)
    pencil = s * s * np.eye(3, dtype=cl) - s * CORIOLIS.astype(cl) - omega_star.astype(cl)
    i, j = [n for n in range(3) if n != axis]
    a, b, c, d = pencil[i, i], pencil[i, j], pencil[j, i], pencil[j, j]
    f0, f1 = -pencil[i, axis], -pencil[j, axis]
    det = a * d - b * c
    v = np.empty(3, dtype=cl)
    v[axis], v[i], v[j] = 1, (f0 * d - b * f1) / det, (a * f1 - c * f0) / det
    return v, pencil[axis] @ v


def refine_root(root, omega_star: np.ndarray, axis: int, iterations: int = 4):
    """Polish an eigenvalue by secant steps on the leftover pencil row (long double)."""
    s = np.clongdouble(root)
    step = np.clongdouble(1e-9j if np.iscomplexobj(root) else 1e-9)
    for _ in range(iterations):
        _, r = _pencil_solve(s, omega_star, axis)
        if r == 0:
            break
        _, r2 = _pencil_solve(s + step, omega_star, axis)
        if r2 == r:
            break
        s = s - r * step / (r2 - r)
    return complex(s) if np.iscomplexobj(root) else float(s.real)


def _mode_shape(root, vec: np.ndarray, omega_star: np.ndarray, axis: int, label: str) -> np.ndarray:
    """Position part of the mode at ``root`` with component ``axis`` set to one.

    Solved from the pencil rather than by rescaling the eigenvector, which
    loses digits in small components.
    """
    pos = vec[:3]
    if abs(pos[axis]) <= 1e-12 * np.max(np.abs(pos)):
        raise ZeroNormalizationComponentError(f"{label} eigenvector has no component along axis {axis}")
    v, _ = _pencil_solve(root, omega_star, axis)
    out = v.astype(complex)
    return out if np.iscomplexobj(root) else out.real


def k_coefficients(modes: ModalData, omega_star: np.ndarray, forcing: np.ndarray) -> np.ndarray:
    """Mode-shape coefficients, returned 1-based: ``k[1]`` .. ``k[17]`` (``k[0]`` unused)."""
    k = np.zeros(18)
    vp = _mode_shape(modes.lambda_plus, modes.vec_plus, omega_star, 0, "growing")
    vm = _mode_shape(modes.lambda_minus, modes.vec_minus, omega_star, 0, "decaying")
    k[1], k[3] = vp[1], vp[2]
    k[2], k[4] = vm[1], vm[2]

    v = _mode_shape(modes.omega, modes.vec_omega, omega_star, 0, "in-plane")
    k[14] = 0.0
    k[7], k[8] = v[1].real, -v[1].imag
    k[11], k[12] = v[2].real, -v[2].imag

    w = _mode_shape(modes.nu, modes.vec_nu, omega_star, 2, "out-of-plane")
    k[13] = 0.0
    k[5], k[6] = w[0].real, -w[0].imag
    k[9], k[10] = w[1].real, -w[1].imag

    if np.any(forcing != 0.0):
        cond = np.linalg.cond(omega_star)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularOmegaStarError(f"stiffness matrix condition number {cond:.3e}")
        k[15:18] = np.linalg.solve(omega_star, -forcing)
    return k


@dataclass(frozen=True)
class LinearModel:
    aep: Aep
    omega_star: np.ndarray
    forcing: np.ndarray
    lambda_0: float
    omega_0: float
    nu_0: float
    omega_r: float
    nu_r: float
    lambda_asymmetry: float
    k: np.ndarray
    roots: np.ndarray
    modes: ModalData = field(repr=False)

    @property
    def params(self) -> SystemParams:
        return self.aep.params

    @property
    def offset(self) -> np.ndarray:
        return self.k[15:18].copy()

    def state_matrix(self) -> np.ndarray:
        return system_matrix(self.omega_star)

    def to_dict(self) -> dict:
        return {
            "aep": self.aep.to_dict(),
            "omega_star": self.omega_star.tolist(),
            "forcing": self.forcing.tolist(),
            "lambda_0": self.lambda_0,
            "omega_0": self.omega_0,
            "nu_0": self.nu_0,
            "omega_r": self.omega_r,
            "nu_r": self.nu_r,
            "lambda_asymmetry": self.lambda_asymmetry,
            "k": {str(n): float(self.k[n]) for n in range(1, 18)},
            "roots": [[float(r.real), float(r.imag)] for r in self.roots],
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def linear_model(aep: Aep) -> LinearModel:
    omega_star = omega_star_matrix(aep)
    forcing = constant_forcing(aep)
    modes = eigenstructure(omega_star)
    omega_r, nu_r = modes.omega.real, modes.nu.real
    if abs(omega_r) >= DAMPING_GATE or abs(nu_r) >= DAMPING_GATE:
        raise StructureViolationError(f"oscillatory roots too far off the imaginary axis: {omega_r:.3e}, {nu_r:.3e}")
    if omega_r or nu_r:
        log.info("dropping real parts of oscillatory roots: omega_r=%.3e nu_r=%.3e", omega_r, nu_r)
    k = k_coefficients(modes, omega_star, forcing)
    return LinearModel(
        aep=aep,
        omega_star=omega_star,
        forcing=forcing,
        lambda_0=modes.lambda_0,
        omega_0=modes.omega.imag,
        nu_0=modes.nu.imag,
        omega_r=omega_r,
        nu_r=nu_r,
        lambda_asymmetry=modes.lambda_asymmetry,
        k=k,
        roots=modes.roots,
        modes=modes,
    )


def linear_solution(t, amplitudes, phases, model: LinearModel, *, exact_rates: bool = False) -> np.ndarray:
    """Closed-form linear motion (scaled, equilibrium-relative); shape ``(3,)`` or ``(3, len(t))``.

    By default the oscillatory real parts are dropped and the saddle rates
    symmetrized, as the series solver assumes. ``exact_rates`` keeps the
    eigenvalues as computed, which solves the linear equations exactly.
    """
    k = model.k
    a1, a2, a3, a4 = (float(a) for a in amplitudes)
    t_arr = np.asarray(t, dtype=float)
    if exact_rates:
        m = model.modes
        grow, decay = np.exp(m.lambda_plus * t_arr), np.exp(m.lambda_minus * t_arr)
        damp1, damp2 = np.exp(model.omega_r * t_arr), np.exp(model.nu_r * t_arr)
    else:
        grow, decay = np.exp(model.lambda_0 * t_arr), np.exp(-model.lambda_0 * t_arr)
        damp1 = damp2 = 1.0
    th1 = model.omega_0 * t_arr + phases[0]
    th2 = model.nu_0 * t_arr + phases[1]
    c1, s1 = damp1 * np.cos(th1), damp1 * np.sin(th1)
    c2, s2 = damp2 * np.cos(th2), damp2 * np.sin(th2)
    x = a1 * grow + a2 * decay + a3 * (c1 + k[14] * s1) + a4 * (k[5] * c2 + k[6] * s2) + k[15]
    y = k[1] * a1 * grow + k[2] * a2 * decay + a3 * (k[7] * c1 + k[8] * s1) + a4 * (k[9] * c2 + k[10] * s2) + k[16]
    z = k[3] * a1 * grow + k[4] * a2 * decay + a3 * (k[11] * c1 + k[12] * s1) + a4 * (c2 + k[13] * s2) + k[17]
    return np.array([x, y, z])
