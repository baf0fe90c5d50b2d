"""
Accuracy of series solutions against numerical integration.

The series state at ``t = 0`` seeds the integrator; the position reached at
``t_eval`` is compared with the series position there. Errors are Euclidean
norms in nondimensional barycentric units (integration runs in the
equilibrium-relative frame, which measures the same difference with less
round-off).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage, stats

from .errors import SailOrbitsError
from .integrator import IntegratorConfig, propagate
from .lindstedt import SeriesSolution

HALF_ARC = math.pi / 2

# the relative frame lets the absolute tolerance follow the excursion size
STUDY_INTEGRATOR = IntegratorConfig(abs_tol=1e-300, rel_tol=1e-14)
# long-double stepping, needed when the series error drops below ~1e-17
PRECISE_INTEGRATOR = IntegratorConfig(abs_tol=1e-300, rel_tol=1e-15, extended=True)


def half_arc_error(solution: SeriesSolution, a3: float, a4: float, t_eval: float = HALF_ARC, *,
                   config: IntegratorConfig | None = None, frame: str = "relative",
                   a1: float = 0.0, a2: float = 0.0, phases=(0.0, 0.0)) -> float:
    """Position mismatch at ``t_eval`` between the series and the integrated series seed."""
    config = PRECISE_INTEGRATOR if config is None else config
    if config.extended and frame != "relative":
        raise ValueError("extended precision integration runs in the relative frame only")
    amps = (a1, a2, a3, a4)
    scaled = solution.evaluate(amps, phases, np.array([0.0, t_eval]))
    g = solution.aep.gamma_norm
    start = g * scaled[:, 0]
    target = g * scaled[:3, 1]
    h = solution.aep.position
    if frame == "relative":
        traj = propagate(start, solution.params, (0.0, t_eval), config, frame="relative", reference=h)
        end = traj.final_state[:3]
    elif frame == "barycentric":
        seed = start.copy()
        seed[:3] += h
        traj = propagate(seed, solution.params, (0.0, t_eval), config)
        end = traj.final_state[:3] - h
    else:
        raise ValueError(f"unknown frame {frame!r}")
    return float(np.linalg.norm(end - target))


@dataclass(frozen=True)
class MeshSpec:
    n3: int = 100
    n4: int = 100
    lo: float = 0.0
    hi: float = 0.2
    t_eval: float = HALF_ARC

    def __post_init__(self):
        if self.n3 < 1 or self.n4 < 1:
            raise ValueError("mesh needs at least one point per axis")
        if not self.hi > self.lo:
            raise ValueError("amplitude range must be increasing")

    @property
    def axis3(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n3)

    @property
    def axis4(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n4)


FLAG_OK, FLAG_FAILED, FLAG_EXACT = 0, 1, 2


@dataclass
class ErrorGrid:
    """``values[i, j]`` is ``log10`` of the error at ``(axis3[i], axis4[j])``."""

    axis3: np.ndarray
    axis4: np.ndarray
    values: np.ndarray
    flags: np.ndarray
    metadata: dict = field(default_factory=dict)

    def transposed(self) -> "ErrorGrid":
        meta = dict(self.metadata, transposed=not self.metadata.get("transposed", False))
        return ErrorGrid(self.axis4, self.axis3, self.values.T.copy(), self.flags.T.copy(), meta)

    def write(self, csv_path, json_path=None) -> None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha3", "alpha4", "log10_error", "flag"])
            for i, a3 in enumerate(self.axis3):
                for j, a4 in enumerate(self.axis4):
                    w.writerow([repr(float(a3)), repr(float(a4)), repr(float(self.values[i, j])), int(self.flags[i, j])])
        if json_path is not None:
            with open(json_path, "w") as fh:
                json.dump(dict(self.metadata, shape=list(self.values.shape)), fh, indent=1, sort_keys=True)
                fh.write("\n")

    @classmethod
    def read(cls, csv_path, json_path=None) -> "ErrorGrid":
        rows = np.loadtxt(csv_path, delimiter=",", skiprows=1).reshape(-1, 4)
        a3 = np.unique(rows[:, 0])
        a4 = np.unique(rows[:, 1])
        values = rows[:, 2].reshape(len(a3), len(a4))
        flags = rows[:, 3].astype(int).reshape(len(a3), len(a4))
        meta = {}
        if json_path is not None:
            with open(json_path) as fh:
                meta = json.load(fh)
            meta.pop("shape", None)
        return cls(a3, a4, values, flags, meta)


def _cell(args):
    solution, a3, a4, t_eval, config = args
    try:
        err = half_arc_error(solution, a3, a4, t_eval, config=config)
    except (SailOrbitsError, ArithmeticError, ValueError):
        return math.inf, FLAG_FAILED
    if not math.isfinite(err):
        return math.inf, FLAG_FAILED
    if err == 0.0:
        return -math.inf, FLAG_EXACT
    return math.log10(err), FLAG_OK


def error_study(solution: SeriesSolution, mesh: MeshSpec | None = None, *, jobs: int = 1,
                config: IntegratorConfig | None = None) -> ErrorGrid:
    """``log10`` half-arc errors over an ``(a3, a4)`` mesh. Failed cells hold ``+inf`` and a flag."""
    mesh = MeshSpec() if mesh is None else mesh
    config = STUDY_INTEGRATOR if config is None else config
    ax3, ax4 = mesh.axis3, mesh.axis4
    tasks = [(solution, float(a3), float(a4), mesh.t_eval, config) for a3 in ax3 for a4 in ax4]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_cell(t) for t in tasks]
    values = np.array([r[0] for r in results]).reshape(len(ax3), len(ax4))
    flags = np.array([r[1] for r in results], dtype=int).reshape(len(ax3), len(ax4))
    meta = {
        "params": solution.params.to_dict(),
        "aep": [float(v) for v in solution.aep.position],
        "order": solution.order,
        "t_eval": mesh.t_eval,
        "mesh": asdict(mesh),
        "integrator": {"abs_tol": config.abs_tol, "rel_tol": config.rel_tol, "extended": config.extended},
        "failed_cells": int(np.sum(flags == FLAG_FAILED)),
    }
    return ErrorGrid(ax3, ax4, values, flags, meta)


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)


# convergence-rate and pattern diagnostics ---------------------------------------


def loglog_slope(eps, errors) -> float:
    """Least-squares slope of ``log10(error)`` against ``log10(eps)``."""
    x = np.log10(np.asarray(eps, dtype=float))
    y = np.log10(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class PatternReport:
    diagonal_spearman: float
    valley_cells: int
    valley_largest_component: int
    renewed_growth: bool
    min_valley_size: int

    @property
    def growth_ok(self) -> bool:
        return self.diagonal_spearman >= 0.8

    @property
    def valley_ok(self) -> bool:
        return self.valley_largest_component >= self.min_valley_size

    @property
    def passed(self) -> bool:
        return self.growth_ok and self.valley_ok and self.renewed_growth


def pattern_report(grid: ErrorGrid, *, decades: float = 2.0, rebound: float = 1.0,
                   interior: bool = True) -> PatternReport:
    """Quantify the three qualitative features of an error map.

    Growth is the Spearman correlation of error with amplitude along
    ``a3 = a4``. Valley cells sit at least ``decades`` below the diagonal
    trend evaluated at the same max-amplitude; the largest 4-connected patch
    is reported. Renewed growth means that along some row or column through
    that patch the error climbs ``rebound`` decades above the patch minimum
    further out. With ``interior`` the single-mode edges ``a3 = 0`` and
    ``a4 = 0`` are left out of the valley search, since they are accurate for
    a different reason.
    """
    vals = np.where(grid.flags == FLAG_OK, grid.values, np.nan)
    n = min(len(grid.axis3), len(grid.axis4))
    diag_amp = np.array([max(grid.axis3[i], grid.axis4[i]) for i in range(n)])
    diag_val = np.array([vals[i, i] for i in range(n)])
    ok = np.isfinite(diag_val) & (diag_amp > 0)
    rho = float(stats.spearmanr(diag_amp[ok], diag_val[ok]).statistic) if ok.sum() >= 3 else float("nan")

    # diagonal trend as a straight line in log-log, so it is defined at every amplitude
    slope, icept = np.polyfit(np.log10(diag_amp[ok]), diag_val[ok], 1) if ok.sum() >= 2 else (0.0, 0.0)
    amp = np.maximum.outer(grid.axis3, grid.axis4)
    with np.errstate(divide="ignore"):
        trend = slope * np.log10(np.where(amp > 0, amp, np.nan)) + icept
    valley = np.isfinite(vals) & np.isfinite(trend) & (vals <= trend - decades)
    if interior:
        valley[grid.axis3 == 0.0, :] = False
        valley[:, grid.axis4 == 0.0] = False
    labels, count = ndimage.label(valley)
    sizes = np.bincount(labels.ravel())[1:] if count else np.array([0])
    largest = int(sizes.max()) if count else 0

    renewed = False
    if count:
        biggest = labels == (int(np.argmax(sizes)) + 1)
        for lines, mask in ((vals, biggest), (vals.T, biggest.T)):
            for row, in_valley in zip(lines, mask):
                if not in_valley.any():
                    continue
                last = int(np.flatnonzero(in_valley).max())
                floor = np.nanmin(np.where(in_valley, row, np.nan))
                beyond = row[last + 1:]
                if beyond.size and np.nanmax(np.where(np.isfinite(beyond), beyond, np.nan), initial=-np.inf) >= floor + rebound:
                    renewed = True
                    break
            if renewed:
                break
    min_size = max(3, n // 10)
    return PatternReport(rho, int(valley.sum()), largest, renewed, min_size)
