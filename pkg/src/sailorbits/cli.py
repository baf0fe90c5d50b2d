"""
Command-line front end.

Every subcommand reads one JSON run configuration (optional; defaults are the
Sun-Earth sail setup) plus flag overrides, and writes its products to the
paths named in the ``output`` block or on the command line.

Exit codes: 0 success, 1 invalid input or missing file, 2 no convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .dynamics import SystemParams
from .equilibria import classical_lagrange_point, find_aep, sweep_aep
from .errors import NoConvergenceError, SailOrbitsError
from .lindstedt import SeriesSolution, build
from .trajectory import TrajectoryRequest, manifold_family, sample
from .validation import MeshSpec, error_study

log = logging.getLogger("sailorbits")

SUN_EARTH_MU = 3.0026053634189284e-6

EXIT_OK, EXIT_INVALID, EXIT_NO_CONVERGENCE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _reject_unknown(cls, data: dict, where: str) -> None:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _floats(value, n: int, what: str) -> tuple:
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a list of {n} numbers") from None
    if len(out) != n or not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{what} must be a list of {n} finite numbers")
    return out


@dataclass
class OrbitBlock:
    amplitudes: tuple = (0.0, 0.0, 0.05, 0.05)
    phases: tuple = (0.0, 0.0)
    t_span: tuple = (0.0, math.pi)
    samples: int = 200
    frame: str = "barycentric"

    def validate(self) -> None:
        self.amplitudes = _floats(self.amplitudes, 4, "orbit.amplitudes")
        self.phases = _floats(self.phases, 2, "orbit.phases")
        self.t_span = _floats(self.t_span, 2, "orbit.t_span")


@dataclass
class ManifoldBlock:
    eps: float = 1e-4
    a3: float = 0.05
    a4: float = 0.05
    duration: float = math.pi
    samples: int = 200
    phases: tuple = (0.0, 0.0)
    frame: str = "barycentric"

    def validate(self) -> None:
        self.phases = _floats(self.phases, 2, "manifold.phases")
        if not self.eps >= 0:
            raise ConfigError("manifold.eps must be non-negative")
        if not self.duration > 0:
            raise ConfigError("manifold.duration must be positive")


@dataclass
class StudyBlock:
    n3: int = 100
    n4: int = 100
    lo: float = 0.0
    hi: float = 0.2
    t_eval: float = math.pi / 2

    def mesh(self) -> MeshSpec:
        try:
            return MeshSpec(int(self.n3), int(self.n4), float(self.lo), float(self.hi), float(self.t_eval))
        except ValueError as exc:
            raise ConfigError(f"study: {exc}") from None


@dataclass
class SweepBlock:
    alpha_deg: list = field(default_factory=lambda: [float(a) for a in range(-80, 81, 10)])
    gamma_deg: list = field(default_factory=lambda: [float(g) for g in range(0, 181, 20)])


@dataclass
class OutputBlock:
    aep: str | None = None
    sweep: str = "sweep.csv"
    series: str = "series.json"
    orbit: str = "orbit.csv"
    manifold: str = "manifold"
    grid: str = "grid.csv"


BLOCKS = {"orbit": OrbitBlock, "manifold": ManifoldBlock, "study": StudyBlock, "sweep": SweepBlock,
          "output": OutputBlock}


@dataclass
class RunConfig:
    mu: float = SUN_EARTH_MU
    beta: float = 0.002
    alpha_deg: float = 80.0
    gamma_deg: float = 0.0
    seed: int = 2
    order: int = 7
    orbit: OrbitBlock = field(default_factory=OrbitBlock)
    manifold: ManifoldBlock = field(default_factory=ManifoldBlock)
    study: StudyBlock = field(default_factory=StudyBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        _reject_unknown(cls, data, "configuration")
        kwargs = {}
        for key, value in data.items():
            if key in BLOCKS:
                if not isinstance(value, dict):
                    raise ConfigError(f"{key} must be an object")
                _reject_unknown(BLOCKS[key], value, key)
                kwargs[key] = BLOCKS[key](**value)
            else:
                kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def validate(self) -> None:
        for name in ("mu", "beta", "alpha_deg", "gamma_deg"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number")
            setattr(self, name, float(value))
        for name in ("seed", "order"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name} must be an integer")
        if self.seed not in (1, 2, 3, 4, 5):
            raise ConfigError("seed must name a Lagrange point 1..5")
        if self.order < 1:
            raise ConfigError("order must be at least 1")
        self.params()  # angle and mass ranges
        self.orbit.validate()
        self.manifold.validate()
        self.study.mesh()

    def params(self) -> SystemParams:
        try:
            return SystemParams.from_degrees(self.mu, self.beta, self.alpha_deg, self.gamma_deg)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)


# commands --------------------------------------------------------------------


def _solve(cfg: RunConfig):
    params = cfg.params()
    return find_aep(params, classical_lagrange_point(params.mu, cfg.seed))


def cmd_solve_aep(cfg: RunConfig, args) -> int:
    aep = _solve(cfg)
    text = json.dumps(aep.to_dict(), indent=1, sort_keys=True)
    print(text)
    if cfg.output.aep:
        Path(cfg.output.aep).write_text(text + "\n")
    return EXIT_OK


def cmd_sweep_aep(cfg: RunConfig, args) -> int:
    alphas = np.radians(np.asarray(cfg.sweep.alpha_deg, dtype=float))
    gammas = np.radians(np.asarray(cfg.sweep.gamma_deg, dtype=float))
    try:
        result = sweep_aep(cfg.beta, alphas, gammas, cfg.seed, mu=cfg.mu)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    result.write_csv(cfg.output.sweep)
    failed = sum(not c.converged for c in result.cells)
    print(f"wrote {cfg.output.sweep} ({len(result.cells)} cells, {failed} not converged)")
    return EXIT_OK


def cmd_build_series(cfg: RunConfig, args) -> int:
    solution = build(_solve(cfg), cfg.order)
    solution.save(cfg.output.series)
    print(f"wrote {cfg.output.series} (order {cfg.order})")
    return EXIT_OK


def _load_series(args, cfg: RunConfig) -> SeriesSolution:
    path = Path(args.coefficients or cfg.output.series)
    if not path.is_file():
        raise FileNotFoundError(f"coefficient file not found: {path}")
    try:
        return SeriesSolution.load(path)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path} is not a coefficient file: {exc}") from None


def cmd_gen_orbit(cfg: RunConfig, args) -> int:
    solution = _load_series(args, cfg)
    o = cfg.orbit
    try:
        request = TrajectoryRequest(o.amplitudes, o.phases, o.t_span, int(o.samples), o.frame)
    except ValueError as exc:
        raise ConfigError(f"orbit: {exc}") from None
    sample(solution, request).write_csv(cfg.output.orbit)
    print(f"wrote {cfg.output.orbit}")
    return EXIT_OK


MANIFOLD_FILES = {"stable+": "stable_plus", "stable-": "stable_minus", "unstable+": "unstable_plus",
                  "unstable-": "unstable_minus"}


def cmd_gen_manifold(cfg: RunConfig, args) -> int:
    solution = _load_series(args, cfg)
    m = cfg.manifold
    try:
        arcs = manifold_family(solution, m.a3, m.a4, m.eps, duration=m.duration, samples=int(m.samples),
                               phases=m.phases, frame=m.frame)
    except ValueError as exc:
        raise ConfigError(f"manifold: {exc}") from None
    for tag, arc in arcs.items():
        path = f"{cfg.output.manifold}_{MANIFOLD_FILES[tag]}.csv"
        arc.write_csv(path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_error_study(cfg: RunConfig, args) -> int:
    solution = _load_series(args, cfg)
    grid = error_study(solution, cfg.study.mesh(), jobs=max(1, args.jobs))
    sidecar = str(Path(cfg.output.grid).with_suffix(".json"))
    grid.write(cfg.output.grid, sidecar)
    print(f"wrote {cfg.output.grid} and {sidecar} ({grid.metadata['failed_cells']} failed cells)")
    return EXIT_OK


COMMANDS = {
    "solve-aep": cmd_solve_aep,
    "sweep-aep": cmd_sweep_aep,
    "build-series": cmd_build_series,
    "gen-orbit": cmd_gen_orbit,
    "gen-manifold": cmd_gen_manifold,
    "error-study": cmd_error_study,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sailorbits", description="Solar-sail orbits near artificial equilibria.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--mu", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--alpha", type=float, dest="alpha_deg", help="cone angle, degrees")
        p.add_argument("--gamma", type=float, dest="gamma_deg", help="clock angle, degrees")
        p.add_argument("--seed", type=int, help="Lagrange point index used as Newton seed")
        p.add_argument("--order", type=int)
        p.add_argument("--out", help="output path (or prefix for gen-manifold)")
        if name in ("gen-orbit", "gen-manifold", "error-study"):
            p.add_argument("--coefficients", help="coefficient file from build-series")
        if name == "error-study":
            p.add_argument("--jobs", type=int, default=1)
    return parser


OUT_FIELD = {"solve-aep": "aep", "sweep-aep": "sweep", "build-series": "series", "gen-orbit": "orbit",
             "gen-manifold": "manifold", "error-study": "grid"}


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for name in ("mu", "beta", "alpha_deg", "gamma_deg", "seed", "order"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.out:
        setattr(cfg.output, OUT_FIELD[args.command], args.out)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except NoConvergenceError as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, FileNotFoundError, SailOrbitsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
