"""``spinstar`` command line: ``run``, ``figure`` and ``selftest``.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 a compare
run exceeded its threshold under ``--assert`` (or ``selftest`` failed).
Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, SolverError, SpinStarError
from .runner import FIGURES, METHODS, MODES, RunConfig, compare_violations, run_config, run_figure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ASSERT = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would print usage and exit(2) on its own
        raise ConfigError(message)


def _angle(text: str) -> float:
    """Float or a simple multiple of pi: ``pi/3``, ``2*pi``, ``0.5pi``."""
    s = text.strip().lower().replace(" ", "")
    if "pi" not in s:
        try:
            return float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None
    num, _, den = s.partition("/")
    num = num.replace("*", "").replace("pi", "")
    try:
        factor = {"": 1.0, "+": 1.0, "-": -1.0}.get(num)
        if factor is None:
            factor = float(num)
        return factor * math.pi / (float(den) if den else 1.0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "mode": "mode",
    "n": "N",
    "alpha": "alpha_over_gamma",
    "family": "family",
    "theta": "theta",
    "beta": "beta",
    "tmax": "t_max_gamma",
    "steps": "steps",
    "methods": "methods",
    "coeff_mode": "tcl2_coeff_mode",
    "inhomogeneity": "tcl2_inhomogeneity",
    "tcl2_step": "tcl2_step",
    "threshold": "assert_threshold",
    "seed": "seed",
    "out": "output",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spinstar", description="Central spin coupled to a spin bath via an intermediate spin.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one configuration and write CSV + JSON")
    run.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--n", type=int, help="number of bath spins")
    run.add_argument("--alpha", type=float, help="alpha / gamma")
    run.add_argument("--family", help="phi+, phi-, psi+, psi- or random (uses --seed)")
    run.add_argument("--theta", type=_angle)
    run.add_argument("--beta", type=_angle)
    run.add_argument("--state-json", help="custom X-state as JSON: {rho11, ..., rho23: [re, im], rho14}")
    run.add_argument("--tmax", type=float, help="final time in units of 1/gamma")
    run.add_argument("--steps", type=int, help="number of grid points (>= 2)")
    run.add_argument("--methods", help=f"comma-separated methods for compare mode ({', '.join(METHODS)})")
    run.add_argument("--coeff-mode", choices=("published", "symmetric"))
    run.add_argument("--inhomogeneity", choices=("degeneracy", "literal"))
    run.add_argument("--tcl2-step", type=float, help="RK4 step in units of 1/gamma")
    run.add_argument("--threshold", type=float, help="compare-mode bound used by --assert")
    run.add_argument("--assert", dest="check", action="store_true",
                     help="exit 4 when a compare metric exceeds the threshold")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="CSV path; metadata goes next to it with a .json suffix")

    fig = sub.add_parser("figure", help="regenerate the data behind a figure")
    fig.add_argument("name", choices=FIGURES + ("all",))
    fig.add_argument("--out-dir", default=".")

    st = sub.add_parser("selftest", help="random cross-checks of exact solver and oracles")
    st.add_argument("--cases", type=int, default=20)
    st.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for dest, key in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    if args.state_json is not None:
        try:
            overrides["custom_state"] = json.loads(args.state_json)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--state-json is not valid JSON: {exc}") from None
    if args.config:
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_mapping(overrides)


def _cmd_run(args) -> int:
    cfg = config_from_args(args)
    traj = run_config(cfg)
    out = Path(cfg.output) if cfg.output else Path(f"spinstar_{cfg.mode}.csv")
    csv_path, meta_path = traj.write(out)
    print(f"wrote {csv_path} and {meta_path}")
    for name, metric in traj.metadata.get("deviation", {}).items():
        print(f"{name}: max_abs={metric['max_abs']:.3e} at t_gamma={metric['time_of_max']:g}")
    if args.check and cfg.mode == "compare":
        bad = compare_violations(traj)
        if bad:
            _emit_error("ThresholdExceeded", f"{', '.join(bad)} above {cfg.threshold():g}", EXIT_ASSERT)
            return EXIT_ASSERT
    return EXIT_OK


def _cmd_figure(args) -> int:
    names = FIGURES if args.name == "all" else (args.name,)
    for name in names:
        fig = run_figure(name, args.out_dir)
        print(f"{name}: {len(fig.columns)} curves -> {Path(args.out_dir) / (name + '.csv')}")
    return EXIT_OK


def selftest(cases: int = 20, seed: int = 0, stream=None) -> bool:
    """Exact solver vs block oracle vs dense oracle on random small problems."""
    stream = sys.stdout if stream is None else stream
    from .exact import exact_population_grid
    from .model import random_params, random_xstate
    from .oracle import block_population_grid, dense_population_grid

    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 10.0, 21)
    worst_exact = worst_block = 0.0
    for _ in range(cases):
        params = random_params(rng)
        x0 = random_xstate(rng)
        dense = dense_population_grid(grid, params, x0)
        worst_exact = max(worst_exact, float(np.max(np.abs(exact_population_grid(grid, params, x0) - dense))))
        worst_block = max(worst_block, float(np.max(np.abs(block_population_grid(grid, params, x0) - dense))))
    ok = worst_exact < 1e-9 and worst_block < 1e-10
    print(f"selftest: {cases} cases (seed {seed}); exact vs dense {worst_exact:.2e}, "
          f"block vs dense {worst_block:.2e}: {'PASS' if ok else 'FAIL'}", file=stream)
    return ok


def _cmd_selftest(args) -> int:
    if args.cases < 1:
        raise ConfigError("--cases must be positive")
    return EXIT_OK if selftest(args.cases, args.seed) else EXIT_ASSERT


def _emit_error(kind: str, message: str, code: int) -> None:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        handler = {"run": _cmd_run, "figure": _cmd_figure, "selftest": _cmd_selftest}[args.command]
        return handler(args)
    except ConfigError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_CONFIG)
        return EXIT_CONFIG
    except SolverError as exc:
        _emit_error(type(exc).__name__, str(exc), EXIT_SOLVER)
        return EXIT_SOLVER
    except SpinStarError as exc:  # pragma: no cover - every subclass is handled above
        _emit_error(type(exc).__name__, str(exc), EXIT_SOLVER)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
