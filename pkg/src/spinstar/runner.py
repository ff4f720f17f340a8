"""Run configurations, solver dispatch and figure recipes.

All times are dimensionless ``gamma * t``; internally ``gamma = 1`` and
``alpha`` is the ratio ``alpha / gamma``.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import BathTooLarge, ConfigError
from .exact import exact_population_grid
from .model import ModelParams, XState, build_state, canonical_family, random_xstate
from .oracle import MAX_DENSE_BATH, block_population_grid, dense_population_grid
from .tcl2 import DEFAULT_STEP, integrate_tcl2, naive_me_population
from .thermo import limit_validity, population_limit_grid
from .trajectory import Trajectory, deviation

MODES = ("exact", "limit", "tcl2", "naive", "oracle", "compare")
METHODS = ("exact", "limit", "tcl2", "naive", "oracle", "dense")
# methods that are exact up to rounding; comparisons among them default to a tight bound
EXACT_METHODS = {"exact", "oracle", "dense"}
TIGHT_THRESHOLD = 1e-9
LOOSE_THRESHOLD = 0.05


@dataclass
class RunConfig:
    """One simulation run. Every field can come from a JSON file or a command-line flag."""

    mode: str = "exact"
    N: Optional[int] = 20
    alpha_over_gamma: float = 0.5
    family: str = "phi_plus"
    theta: float = math.pi / 4
    beta: float = 0.0
    custom_state: Optional[dict] = None
    t_max_gamma: float = 10.0
    steps: int = 201
    methods: tuple = ("exact", "oracle")
    tcl2_coeff_mode: str = "published"
    tcl2_inhomogeneity: str = "degeneracy"
    tcl2_step: float = DEFAULT_STEP
    assert_threshold: Optional[float] = None
    seed: int = 0
    output: Optional[str] = None
    label: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if isinstance(self.methods, str):
            self.methods = tuple(m.strip() for m in self.methods.split(",") if m.strip())
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
        if self.mode == "compare" and len(self.methods) < 2:
            raise ConfigError("compare mode needs at least two methods")
        if not (isinstance(self.steps, int) and self.steps >= 2):
            raise ConfigError(f"steps must be an integer >= 2, got {self.steps!r}")
        if not (math.isfinite(self.t_max_gamma) and self.t_max_gamma > 0):
            raise ConfigError(f"t_max_gamma must be positive, got {self.t_max_gamma}")
        if not (math.isfinite(self.alpha_over_gamma) and self.alpha_over_gamma >= 0):
            raise ConfigError(f"alpha_over_gamma must be >= 0, got {self.alpha_over_gamma}")
        needs_bath = set(self.active_methods()) - {"limit", "naive"}
        if needs_bath and (self.N is None or int(self.N) != self.N or self.N < 1):
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if self.custom_state is None and self.family != "random":
            self.family = canonical_family(self.family)
        if self.tcl2_coeff_mode not in ("published", "symmetric"):
            raise ConfigError(f"tcl2_coeff_mode must be 'published' or 'symmetric', got {self.tcl2_coeff_mode!r}")
        if self.tcl2_inhomogeneity not in ("degeneracy", "literal"):
            raise ConfigError(f"tcl2_inhomogeneity must be 'degeneracy' or 'literal', got {self.tcl2_inhomogeneity!r}")
        self.state()  # raises on invalid states

    def active_methods(self) -> tuple:
        return self.methods if self.mode == "compare" else (self.mode,)

    def state(self) -> XState:
        if self.custom_state is not None:
            return XState.from_dict(self.custom_state)
        if self.family == "random":
            return random_xstate(np.random.default_rng(self.seed))
        return build_state(self.family, self.theta, self.beta)

    def params(self) -> ModelParams:
        return ModelParams(1.0, float(self.alpha_over_gamma), None if self.N is None else int(self.N))

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max_gamma, self.steps)

    def threshold(self) -> float:
        if self.assert_threshold is not None:
            return float(self.assert_threshold)
        return TIGHT_THRESHOLD if set(self.methods) <= EXACT_METHODS else LOOSE_THRESHOLD

    def as_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        data = dict(data)
        state = data.pop("state", None)
        if isinstance(state, dict):
            if "custom" in state:
                data["custom_state"] = state["custom"]
            else:
                for key in ("family", "theta", "beta"):
                    if key in state:
                        data[key] = state[key]
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path, overrides: Optional[dict] = None) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update(overrides or {})
        return cls.from_mapping(data)


def thread_cap() -> int:
    env = os.environ.get("SPINSTAR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SPINSTAR_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _state_notes(cfg: RunConfig, x0: XState) -> list:
    notes = []
    if cfg.custom_state is None and cfg.family in ("phi_plus", "phi_minus", "psi_plus", "psi_minus"):
        s, c = math.sin(cfg.theta), math.cos(cfg.theta)
        if abs(s) < 1e-12 or abs(c) < 1e-12:
            notes.append(
                f"theta={cfg.theta:g} makes the Bell-like state a product state "
                f"(rho11={x0.rho11:g}, rho22={x0.rho22:g}, rho33={x0.rho33:g}, rho44={x0.rho44:g}); "
                "implemented literally"
            )
    return notes


def compute_method(method: str, grid: np.ndarray, cfg: RunConfig, x0: XState, meta: dict) -> np.ndarray:
    params = cfg.params()
    if method == "exact":
        return exact_population_grid(grid, params, x0)
    if method == "oracle":
        return np.clip(block_population_grid(grid, params, x0), 0.0, 1.0)
    if method == "dense":
        if params.N > MAX_DENSE_BATH:
            raise BathTooLarge(f"dense evolution supports at most {MAX_DENSE_BATH} bath spins, got {params.N}")
        return np.clip(dense_population_grid(grid, params, x0), 0.0, 1.0)
    if method == "limit":
        meta["limit_validity"] = limit_validity(params)
        if meta["limit_validity"] != "ok":
            meta.setdefault("warnings", []).append(
                "alpha > gamma: the thermodynamic-limit formula is only reliable for weak bath coupling"
            )
        return population_limit_grid(grid, params, x0)
    if method == "tcl2":
        pops, info = integrate_tcl2(
            grid, params, x0, cfg.tcl2_step, cfg.tcl2_coeff_mode, cfg.tcl2_inhomogeneity, return_info=True
        )
        meta["tcl2_max_drift"] = info.max_drift
        return pops
    if method == "naive":
        return naive_me_population(grid, params.gamma, x0, cfg.tcl2_step)["naive"]
    raise ConfigError(f"unknown method {method!r}")


def run_config(cfg: RunConfig) -> Trajectory:
    """Evaluate every requested method on the configured grid."""
    grid = cfg.grid()
    x0 = cfg.state()
    echo = cfg.as_dict()
    echo.pop("output")  # where the bytes go must not change them
    meta = {
        "config": echo,
        "version": __version__,
        "numpy": np.__version__,
        "initial_state": x0.as_dict(),
        "time_unit": "1/gamma",
    }
    notes = _state_notes(cfg, x0)
    if notes:
        meta["notes"] = notes
    traj = Trajectory(grid, {}, meta)
    methods = cfg.active_methods()
    for method in methods:
        traj.add(method, compute_method(method, grid, cfg, x0, meta))
    if cfg.mode == "compare":
        ref = methods[0]
        metrics = {}
        for other in methods[1:]:
            name = f"absdiff_{other}_{ref}"
            traj.add(name, np.abs(traj[other] - traj[ref]))
            metrics[f"{other}_vs_{ref}"] = deviation(traj[other], traj[ref], grid)
        meta["deviation"] = metrics
        meta["assert_threshold"] = cfg.threshold()
    return traj


def compare_violations(traj: Trajectory) -> list:
    """Names of compare metrics above the recorded threshold."""
    meta = traj.metadata
    limit = meta.get("assert_threshold")
    if limit is None:
        return []
    return [k for k, v in meta.get("deviation", {}).items() if not v["max_abs"] <= limit]


# ---------------------------------------------------------------------------
# figures


@dataclass(frozen=True)
class Curve:
    column: str
    config: RunConfig


@dataclass
class FigureRecipe:
    name: str
    description: str
    curves: list = field(default_factory=list)

    def configs(self) -> list:
        return [c.config for c in self.curves]


_PI = math.pi


def _cfg(mode, N, alpha, family, theta, beta, tmax, steps=401, **extra):
    return RunConfig(mode=mode, N=N, alpha_over_gamma=alpha, family=family, theta=theta, beta=beta,
                     t_max_gamma=tmax, steps=steps, **extra)


def figure_recipe(name: str) -> FigureRecipe:
    """Parameter sets of the reference figures fig2 ... fig9; time ranges are our choice."""
    name = name.lower()
    if name == "fig2":
        return FigureRecipe(name, "exact, N=50, phi+(pi/2, 0), several alpha", [
            Curve(f"exact_alpha_{a:g}", _cfg("exact", 50, a, "phi_plus", _PI / 2, 0.0, 20.0))
            for a in (0.0, 0.25, 1.0, 100.0)
        ])
    if name == "fig3":
        return FigureRecipe(name, "exact, N=50, phi+(pi/3, 0), several alpha", [
            Curve(f"exact_alpha_{a:g}", _cfg("exact", 50, a, "phi_plus", _PI / 3, 0.0, 20.0))
            for a in (2.0, 1.0, 0.5, 0.25)
        ])
    if name == "fig4":
        return FigureRecipe(name, "bath-size dependence, phi+(pi/3, 0), alpha=gamma/2", [
            Curve("exact_N_10", _cfg("exact", 10, 0.5, "phi_plus", _PI / 3, 0.0, 10.0)),
            Curve("exact_N_50", _cfg("exact", 50, 0.5, "phi_plus", _PI / 3, 0.0, 10.0)),
            Curve("limit", _cfg("limit", None, 0.5, "phi_plus", _PI / 3, 0.0, 10.0)),
        ])
    if name == "fig5":
        return FigureRecipe(name, "initial-correlation dependence, N=50, alpha=gamma, phi+(pi/3, beta)", [
            Curve(f"exact_beta_{label}", _cfg("exact", 50, 1.0, "phi_plus", _PI / 3, beta, 10.0))
            for label, beta in (("0", 0.0), ("pi_2", _PI / 2), ("pi_4", _PI / 4), ("pi_6", _PI / 6))
        ])
    if name == "fig6":
        return FigureRecipe(name, "thermodynamic limit, alpha=gamma/4, phi-(pi/3, beta)", [
            Curve(f"limit_beta_{label}", _cfg("limit", None, 0.25, "phi_minus", _PI / 3, beta, 20.0))
            for label, beta in (("0", 0.0), ("pi_4", _PI / 4), ("pi_2", _PI / 2))
        ])
    if name == "fig7":
        curves = []
        for label, beta in (("pi_2", _PI / 2), ("pi_3", _PI / 3), ("pi", _PI)):
            for method in ("exact", "tcl2"):
                curves.append(Curve(f"{method}_beta_{label}",
                                    _cfg(method, 20, 0.5, "phi_plus", _PI / 3, beta, 5.0)))
        return FigureRecipe(name, "TCL2 vs exact, N=20, alpha=gamma/2, phi+(pi/3, beta)", curves)
    if name in ("fig8", "fig9"):
        tmax, steps = (5.0, 401) if name == "fig8" else (50.0, 1001)
        curves = []
        for a in (0.5, 2.0, 10.0):
            for method in ("exact", "tcl2"):
                curves.append(Curve(f"{method}_alpha_{a:g}",
                                    _cfg(method, 20, a, "phi_plus", _PI, 0.0, tmax, steps)))
        return FigureRecipe(name, "TCL2 vs exact, N=20, phi+(pi, 0), several alpha", curves)
    raise ConfigError(f"unknown figure {name!r}; expected fig2 ... fig9")


FIGURES = tuple(f"fig{k}" for k in range(2, 10))


def run_figure(name: str, out_dir) -> Trajectory:
    """Compute every curve of a figure and write ``<out_dir>/<name>.csv`` plus metadata."""
    recipe = figure_recipe(name)
    grids = {tuple(c.config.grid()) for c in recipe.curves}
    if len(grids) != 1:
        raise ConfigError(f"curves of {name} do not share a time grid")
    workers = min(thread_cap(), len(recipe.curves))

    def one(curve: Curve):
        return run_config(curve.config)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, recipe.curves))
    else:
        results = [one(c) for c in recipe.curves]
    grid = recipe.curves[0].config.grid()
    meta = {"figure": name, "description": recipe.description, "version": __version__, "curves": {}}
    fig = Trajectory(grid, {}, meta)
    for curve, traj in zip(recipe.curves, results):
        fig.add(curve.column, traj[curve.config.mode])
        entry = {"config": curve.config.as_dict()}
        for key in ("notes", "limit_validity", "warnings", "tcl2_max_drift"):
            if key in traj.metadata:
                entry[key] = traj.metadata[key]
        meta["curves"][curve.column] = entry
    # paired exact/TCL2 curves get a deviation summary
    devs = {}
    for col in fig.columns:
        if col.startswith("tcl2_"):
            partner = "exact_" + col[len("tcl2_"):]
            if partner in fig.columns:
                devs[col[len("tcl2_"):]] = deviation(fig[col], fig[partner], grid)
    if devs:
        meta["tcl2_vs_exact"] = devs
    fig.write(Path(out_dir) / f"{name}.csv")
    return fig
