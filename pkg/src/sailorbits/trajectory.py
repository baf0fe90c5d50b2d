"""
Sampling series solutions into concrete trajectories.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import State
from .lindstedt import SeriesSolution

ZERO_THRESHOLD = 1e-15


class MotionClass(str, enum.Enum):
    UNSTABLE = "unstable"
    STABLE = "stable"
    TRANSIT = "transit"
    NON_TRANSIT = "non-transit"
    PERIODIC = "periodic"
    EQUILIBRIUM = "equilibrium"


def classify(a1: float, a2: float, a3: float, a4: float) -> MotionClass:
    """Motion type implied by the amplitude signs (``|a| < 1e-15`` counts as zero)."""
    nz = [abs(a) >= ZERO_THRESHOLD for a in (a1, a2, a3, a4)]
    if nz[0] and not nz[1]:
        return MotionClass.UNSTABLE
    if nz[1] and not nz[0]:
        return MotionClass.STABLE
    if nz[0] and nz[1]:
        return MotionClass.TRANSIT if math.copysign(1, a1) != math.copysign(1, a2) else MotionClass.NON_TRANSIT
    if nz[2] or nz[3]:
        return MotionClass.PERIODIC
    return MotionClass.EQUILIBRIUM


FRAMES = ("barycentric", "aep")


@dataclass(frozen=True)
class TrajectoryRequest:
    amplitudes: tuple = (0.0, 0.0, 0.0, 0.0)
    phases: tuple = (0.0, 0.0)
    t_span: tuple = (0.0, math.pi)
    samples: int = 200
    frame: str = "barycentric"

    def __post_init__(self):
        if len(self.amplitudes) != 4 or len(self.phases) != 2:
            raise ValueError("need four amplitudes and two phases")
        if self.samples < 2:
            raise ValueError("sample count must be at least 2")
        if not all(math.isfinite(v) for v in self.t_span):
            raise ValueError("time span must be finite")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_span[0], self.t_span[1], self.samples)


@dataclass
class Samples:
    t: np.ndarray
    states: np.ndarray  # (n, 6)
    frame: str
    metadata: dict = field(default_factory=dict)

    def __iter__(self):
        for t, s in zip(self.t, self.states):
            yield float(t), State.from_array(s)

    def __len__(self) -> int:
        return len(self.t)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            for key, value in self.metadata.items():
                fh.write(f"# {key}: {json.dumps(value)}\n")
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z", "vx", "vy", "vz"])
            for t, s in zip(self.t, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in s])

    @classmethod
    def read_csv(cls, path) -> "Samples":
        meta, rows = {}, []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].partition(":")
                    meta[key.strip()] = json.loads(value)
                elif line.startswith("t,"):
                    continue
                elif line.strip():
                    rows.append([float(v) for v in line.split(",")])
        arr = np.array(rows, dtype=float).reshape(-1, 7)
        return cls(arr[:, 0], arr[:, 1:], meta.get("frame", "barycentric"), meta)


def series_state(solution: SeriesSolution, amplitudes, phases, t, frame: str = "barycentric") -> np.ndarray:
    """State(s) from the series; ``(6,)`` for scalar ``t``, else ``(len(t), 6)``."""
    scaled = solution.evaluate(amplitudes, phases, t)
    if frame == "aep":
        return scaled.T
    if frame != "barycentric":
        raise ValueError(f"frame must be one of {FRAMES}")
    g = solution.aep.gamma_norm
    out = g * scaled
    out[:3] = out[:3] + (solution.aep.position[:, None] if out.ndim == 2 else solution.aep.position)
    return out.T


def trajectory_metadata(solution: SeriesSolution, request: TrajectoryRequest, label: str | None = None) -> dict:
    meta = {
        "params": solution.params.to_dict(),
        "aep": [float(v) for v in solution.aep.position],
        "order": solution.order,
        "amplitudes": [float(a) for a in request.amplitudes],
        "phases": [float(p) for p in request.phases],
        "frame": request.frame,
        "class": classify(*request.amplitudes).value,
    }
    if label:
        meta["label"] = label
    return meta


def sample(solution: SeriesSolution, request: TrajectoryRequest, label: str | None = None) -> Samples:
    t = request.times
    states = series_state(solution, request.amplitudes, request.phases, t, request.frame)
    return Samples(t, states, request.frame, trajectory_metadata(solution, request, label))


def period(solution: SeriesSolution, amplitudes) -> float:
    """``2 pi / omega`` with the in-plane rate evaluated at the given amplitudes."""
    omega, _, _ = solution.freqs.values(amplitudes)
    return 2.0 * math.pi / omega


def manifold_family(solution: SeriesSolution, a3: float, a4: float, eps: float, *,
                    duration: float = math.pi, samples: int = 200, phases=(0.0, 0.0),
                    frame: str = "barycentric", branch: str = "both") -> dict:
    """Stable (``a2 = +-eps``, sampled over ``[-duration, 0]``) and unstable (``a1 = +-eps``, ``[0, duration]``) arcs."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if branch not in ("both", "stable", "unstable"):
        raise ValueError("branch must be 'both', 'stable' or 'unstable'")
    arcs = {}
    if branch in ("both", "stable"):
        for sign, tag in ((1.0, "stable+"), (-1.0, "stable-")):
            req = TrajectoryRequest((0.0, sign * eps, a3, a4), tuple(phases), (-duration, 0.0), samples, frame)
            arcs[tag] = sample(solution, req, tag)
    if branch in ("both", "unstable"):
        for sign, tag in ((1.0, "unstable+"), (-1.0, "unstable-")):
            req = TrajectoryRequest((sign * eps, 0.0, a3, a4), tuple(phases), (0.0, duration), samples, frame)
            arcs[tag] = sample(solution, req, tag)
    return arcs
