"""Experiment configuration: INI-style file with nested sections.

The canonical input artifact is a single plain-text file read by
configparser; the README documents the schema. The config hash covers
every semantically meaningful field (physics, ensemble, diagnostics)
and deliberately excludes the output location.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GeometryError
from .grid import FarField, Grid, GridConfig, ObstacleSpec, build_grid
from .initial import FAMILIES
from .solver import SolverConfig
from .thermo import GasLaw, ViscosityPair

EPSILON_KINDS = ("harmonic", "geometric", "constant")


def _floats(text: str) -> list:
    return [float(tok) for tok in text.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    # grid
    nx: int = 32
    ny: int = 32
    x_min: float = -2.0
    x_max: float = 2.0
    y_min: float = -2.0
    y_max: float = 2.0
    obstacle_kind: str = "none"
    disc_center: tuple = (0.0, 0.0)
    disc_radius: float = 0.0
    polygon_vertices: tuple = ()
    # gas / viscosity / far field
    a: float = 1.0
    gamma: float = 1.4
    mu: float = 1.0
    lam: float = 0.0
    rho_inf: float = 1.0
    u_inf: tuple = (0.0, 0.0)
    # epsilon schedule
    epsilon_kind: str = "harmonic"
    eps0: float = 0.1
    eps_q: float = 0.7
    # ensemble
    n_members: int = 8
    base_seed: int = 1
    dirac: bool = False
    initial: str = "gaussian-bump"
    family_params: dict = field(default_factory=dict)
    # solver
    cfl: float = 0.4
    t_end: float = 0.2
    snapshot_times: tuple = (0.1, 0.2)
    flux: str = "rusanov"
    integrator: str = "euler"
    bc: str = "farfield"
    reconstruction: str = "none"
    floor_frac: float = 1e-10
    # observables
    n_scalar: int = 32
    n_vector: int = 16
    n_composite: int = 16
    observable_seed: int = 0
    # diagnostics
    energy_budget: float = 10.0
    psd_tol: float = 1e-10
    window: tuple = ()  # (t0, t1, x0, x1, y0, y1); empty = auto
    l_schedule: tuple = ()
    i8_epsilons: tuple = (0.5, 0.1)
    n_schedule: tuple = ()  # empty = dyadic up to n_members
    # output
    out_dir: str = "out"

    def semantic_dict(self) -> dict:
        d = {}
        for k, v in self.__dict__.items():
            if k == "out_dir":
                continue
            if isinstance(v, tuple):
                v = list(v)
            d[k] = v
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    # ---- builders ----------------------------------------------------
    def obstacle(self) -> ObstacleSpec:
        if self.obstacle_kind == "disc":
            return ObstacleSpec(kind="disc", center=tuple(self.disc_center),
                                radius=self.disc_radius)
        if self.obstacle_kind == "polygon":
            v = np.array(self.polygon_vertices, dtype=float).reshape(-1, 2)
            return ObstacleSpec(kind="polygon", vertices=v)
        return ObstacleSpec(kind="none")

    def grid(self) -> Grid:
        return build_grid(GridConfig(
            nx=self.nx, ny=self.ny, x_min=self.x_min, x_max=self.x_max,
            y_min=self.y_min, y_max=self.y_max, obstacle=self.obstacle(),
        ))

    def law(self) -> GasLaw:
        return GasLaw(a=self.a, gamma=self.gamma)

    def viscosity(self) -> ViscosityPair:
        return ViscosityPair(mu=self.mu, lam=self.lam)

    def far_field(self) -> FarField:
        return FarField(rho_inf=self.rho_inf, u_inf=tuple(self.u_inf))

    def epsilons(self) -> list:
        n = self.n_members
        if self.dirac or self.epsilon_kind == "constant":
            return [self.eps0] * n
        if self.epsilon_kind == "harmonic":
            return [self.eps0 / (k + 1) for k in range(n)]
        if self.epsilon_kind == "geometric":
            return [self.eps0 * self.eps_q ** (k + 1) for k in range(n)]
        raise ConfigError(f"unknown epsilon schedule {self.epsilon_kind!r}")

    def solver_config(self, epsilon: float) -> SolverConfig:
        return SolverConfig(
            t_end=self.t_end, snapshot_times=tuple(self.snapshot_times),
            epsilon=epsilon, cfl=self.cfl, flux=self.flux,
            integrator=self.integrator, bc=self.bc,
            reconstruction=self.reconstruction, floor_frac=self.floor_frac,
        )

    def report_schedule(self) -> list:
        if self.n_schedule:
            ns = sorted(set(int(n) for n in self.n_schedule))
        else:
            ns = []
            n = 1
            while n < self.n_members:
                ns.append(n)
                n *= 2
            ns.append(self.n_members)
        if ns[0] < 1 or ns[-1] > self.n_members:
            raise ConfigError("report schedule exceeds member count")
        return ns

    def validate(self) -> None:
        if self.epsilon_kind not in EPSILON_KINDS:
            raise ConfigError(f"unknown epsilon schedule {self.epsilon_kind!r}")
        if self.initial not in FAMILIES:
            raise ConfigError(f"unknown initial-data family {self.initial!r}")
        if self.n_members < 1:
            raise ConfigError("n_members must be >= 1")
        if self.dirac and self.epsilon_kind != "constant":
            raise ConfigError("dirac mode requires the constant epsilon schedule")
        try:
            self.grid()
            self.law()
            self.viscosity()
            self.far_field()
            self.solver_config(self.eps0)
        except ConfigError:
            raise
        except (ValueError, GeometryError) as exc:
            raise ConfigError(str(exc)) from exc


_FAMILY_KEYS = ("bump_amplitude", "bump_width", "shear_amplitude",
                "shear_envelope_width")


def load_config(path) -> ExperimentConfig:
    """Parse the INI experiment file; raises ConfigError on bad input."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    cfg = ExperimentConfig()
    try:
        g = parser["grid"] if parser.has_section("grid") else {}
        cfg.nx = int(g.get("nx", cfg.nx))
        cfg.ny = int(g.get("ny", cfg.ny))
        cfg.x_min = float(g.get("x_min", cfg.x_min))
        cfg.x_max = float(g.get("x_max", cfg.x_max))
        cfg.y_min = float(g.get("y_min", cfg.y_min))
        cfg.y_max = float(g.get("y_max", cfg.y_max))
        cfg.obstacle_kind = g.get("obstacle", cfg.obstacle_kind).strip()
        if "disc_center" in g:
            cfg.disc_center = tuple(_floats(g["disc_center"]))
        cfg.disc_radius = float(g.get("disc_radius", cfg.disc_radius))
        if "polygon_vertices" in g:
            verts = []
            for pair in g["polygon_vertices"].split(";"):
                pair = pair.strip()
                if pair:
                    verts.extend(_floats(pair))
            cfg.polygon_vertices = tuple(verts)

        if parser.has_section("gas"):
            cfg.a = parser.getfloat("gas", "a", fallback=cfg.a)
            cfg.gamma = parser.getfloat("gas", "gamma", fallback=cfg.gamma)
        if parser.has_section("viscosity"):
            cfg.mu = parser.getfloat("viscosity", "mu", fallback=cfg.mu)
            cfg.lam = parser.getfloat("viscosity", "lambda", fallback=cfg.lam)
        if parser.has_section("farfield"):
            cfg.rho_inf = parser.getfloat("farfield", "rho_inf", fallback=cfg.rho_inf)
            if parser.has_option("farfield", "u_inf"):
                cfg.u_inf = tuple(_floats(parser.get("farfield", "u_inf")))

        if parser.has_section("epsilons"):
            e = parser["epsilons"]
            cfg.epsilon_kind = e.get("kind", cfg.epsilon_kind).strip()
            cfg.eps0 = float(e.get("eps0", cfg.eps0))
            cfg.eps_q = float(e.get("q", cfg.eps_q))

        if parser.has_section("ensemble"):
            e = parser["ensemble"]
            cfg.n_members = int(e.get("n_members", cfg.n_members))
            cfg.base_seed = int(e.get("base_seed", cfg.base_seed))
            cfg.dirac = e.get("dirac", "false").strip().lower() in ("1", "true", "yes")
            cfg.initial = e.get("initial", cfg.initial).strip()
            params = {}
            for key in _FAMILY_KEYS:
                if key in e:
                    params[key] = float(e[key])
            if "shear_wavenumber" in e:
                params["shear_wavenumber"] = int(e["shear_wavenumber"])
            if "bump_center" in e:
                params["bump_center"] = tuple(_floats(e["bump_center"]))
            cfg.family_params = params

        if parser.has_section("solver"):
            s = parser["solver"]
            cfg.cfl = float(s.get("cfl", cfg.cfl))
            cfg.t_end = float(s.get("t_end", cfg.t_end))
            if "snapshot_times" in s:
                cfg.snapshot_times = tuple(_floats(s["snapshot_times"]))
            cfg.flux = s.get("flux", cfg.flux).strip()
            cfg.integrator = s.get("integrator", cfg.integrator).strip()
            cfg.bc = s.get("bc", cfg.bc).strip()
            cfg.reconstruction = s.get("reconstruction", cfg.reconstruction).strip()
            cfg.floor_frac = float(s.get("floor_frac", cfg.floor_frac))

        if parser.has_section("observables"):
            o = parser["observables"]
            cfg.n_scalar = int(o.get("n_scalar", cfg.n_scalar))
            cfg.n_vector = int(o.get("n_vector", cfg.n_vector))
            cfg.n_composite = int(o.get("n_composite", cfg.n_composite))
            cfg.observable_seed = int(o.get("seed", cfg.observable_seed))

        if parser.has_section("diagnostics"):
            d = parser["diagnostics"]
            cfg.energy_budget = float(d.get("energy_budget", cfg.energy_budget))
            cfg.psd_tol = float(d.get("psd_tol", cfg.psd_tol))
            if "window" in d:
                cfg.window = tuple(_floats(d["window"]))
            if "l_schedule" in d:
                cfg.l_schedule = tuple(_floats(d["l_schedule"]))
            if "i8_epsilons" in d:
                cfg.i8_epsilons = tuple(_floats(d["i8_epsilons"]))
            if "n_schedule" in d:
                cfg.n_schedule = tuple(int(x) for x in _floats(d["n_schedule"]))

        if parser.has_section("output"):
            cfg.out_dir = parser.get("output", "directory", fallback=cfg.out_dir)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value in {path}: {exc}") from exc

    cfg.validate()
    return cfg
