"""Command-line surface: parse inputs, dispatch computations, write reports.

Every command writes one CSV (with '#' footer lines recording grid size,
tolerances, version, and an input hash) and, unless --no-plot is given, a
PNG figure next to it. Identical inputs produce byte-identical CSVs.

Exit codes: 0 success, 1 precondition or configuration problem,
2 numerical failure (the failing stage is named on stderr).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, optimal, pde, plots
from . import speed as speed_mod
from .coeffs import DEFAULT_GRID_SIZE, means, parse_coefficient
from .eigen import assemble_operator, principal_eigenpair
from .errors import CoefficientError, NumericalError, PreconditionError

COMMANDS = (
    "speed",
    "optimize",
    "verify-equality",
    "constancy",
    "perturb",
    "scan-period",
    "simulate",
    "stationary",
)

_REQUIRED = {
    "speed": ("d", "r", "period"),
    "optimize": ("d", "period", "alpha"),
    "verify-equality": ("d", "r", "period"),
    "constancy": ("d", "period", "alpha"),
    "perturb": ("d", "period", "alpha"),
    "scan-period": ("d", "r", "period", "Ls"),
    "simulate": ("d", "r", "period"),
    "stationary": ("d", "r", "period"),
}

_TOLERANCES = "lambda_rel=1e-10;c_abs=1e-6;eigen_residual=1e-8;stationary_residual=1e-8"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    d: str = ""
    r: str = ""
    period: float = 0.0
    alpha: float = float("nan")
    grid_size: int = DEFAULT_GRID_SIZE
    output: str = ""
    Ls: str = ""
    epsilons: str = "0.1,-0.1,0.5,-0.5"
    seed: int = 42
    domain_half_width: float = 400.0
    mesh: int = 0
    dt: float = 0.0
    t_end: float = 150.0
    threshold: float = 0.0
    fit_start: float = 0.5
    fit_end: float = 1.0
    init_center: float = 0.0
    init_half_width: float = 5.0
    init_height: float = 0.5
    snapshot_interval: float = 0.0
    no_plot: bool = False

    def canonical_items(self):
        for f in fields(self):
            yield f.name, getattr(self, f.name)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    """Parse a config-file value for the named key."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown key {key!r}")
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "bool":
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if ftype == "int":
            return int(text)
        if ftype == "float":
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"malformed value for key {key!r}: {raw.strip()!r}") from None


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        values[key] = _coerce(key, raw)
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kppspeed",
        description="Front speeds and optimal growth for the periodic Fisher-KPP equation",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="computation to run")
    parser.add_argument("--config", help="key = value configuration file; flags override it")
    parser.add_argument("--d", dest="d", help="diffusion coefficient (expression or Fourier record)")
    parser.add_argument("--r", dest="r", help="growth coefficient (expression or Fourier record)")
    parser.add_argument("--period", type=float, help="period L of the coefficients")
    parser.add_argument("--alpha", type=float, help="target mean of the growth coefficient")
    parser.add_argument("--grid-size", dest="grid_size", type=int, help="grid points per period (power of two)")
    parser.add_argument("--output", help="CSV output path (default <command>.csv)")
    parser.add_argument("--Ls", dest="Ls", help="comma-separated increasing periods for scan-period")
    parser.add_argument("--epsilons", help="comma-separated perturbation sizes")
    parser.add_argument("--seed", type=int, help="random seed for perturbations")
    parser.add_argument("--domain-half-width", dest="domain_half_width", type=float)
    parser.add_argument("--mesh", type=int, help="spatial points for simulate (0 = rule-based)")
    parser.add_argument("--dt", type=float, help="time step for simulate (0 = rule-based)")
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--threshold", type=float, help="front level (0 = 0.01 * mean r)")
    parser.add_argument("--fit-start", dest="fit_start", type=float)
    parser.add_argument("--fit-end", dest="fit_end", type=float)
    parser.add_argument("--init-center", dest="init_center", type=float)
    parser.add_argument("--init-half-width", dest="init_half_width", type=float)
    parser.add_argument("--init-height", dest="init_height", type=float)
    parser.add_argument("--snapshot-interval", dest="snapshot_interval", type=float)
    parser.add_argument("--no-plot", dest="no_plot", action="store_true", default=None)
    return parser


def load_config(argv) -> RunConfig:
    """Merge command-line flags over an optional config file into a RunConfig."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    merged = dict(_read_config_file(args.config)) if args.config else {}
    for key in _FIELD_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    config = RunConfig()
    for key, value in merged.items():
        setattr(config, key, value)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if not config.command:
        raise ConfigError("missing required key 'command'")
    if config.command not in COMMANDS:
        raise ConfigError(f"unknown command {config.command!r}")
    for key in _REQUIRED[config.command]:
        if not getattr(config, key):
            raise ConfigError(f"missing required key {key!r} for command {config.command!r}")
    if not (np.isfinite(config.period) and config.period > 0):
        raise ConfigError(f"malformed value for key 'period': must be positive, got {config.period}")
    n = config.grid_size
    if n < 16 or (n & (n - 1)) != 0:
        raise ConfigError(f"malformed value for key 'grid_size': must be a power of two >= 16, got {n}")
    if config.command in ("optimize", "constancy", "perturb"):
        if not (np.isfinite(config.alpha) and config.alpha > 0):
            raise ConfigError(f"malformed value for key 'alpha': must be positive, got {config.alpha}")
    if config.command == "scan-period":
        ls = _parse_float_list("Ls", config.Ls)
        if len(ls) < 3 or any(b <= a for a, b in zip(ls, ls[1:])) or ls[0] <= 0:
            raise ConfigError("malformed value for key 'Ls': need >= 3 increasing positive periods")
    if config.command == "perturb":
        _parse_float_list("epsilons", config.epsilons)
    if not config.output:
        config.output = f"{config.command}.csv"


def _parse_float_list(key: str, text: str):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"malformed value for key {key!r}: {text!r}") from None


# ---------------------------------------------------------------------------
# Report writing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _input_hash(config: RunConfig) -> str:
    blob = "\n".join(f"{k}={_fmt(v)}" for k, v in config.canonical_items())
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_csv(path, header, rows, config: RunConfig, extra_footer=()):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    lines += list(extra_footer)
    lines.append(f"# grid_size = {config.grid_size}")
    lines.append(f"# tolerances = {_TOLERANCES}")
    lines.append(f"# version = {__version__}")
    lines.append(f"# input_hash = {_input_hash(config)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _figure_path(output: str) -> str:
    return str(Path(output).with_suffix(".png"))


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def _coefficients(config: RunConfig, need_r: bool = True):
    d = parse_coefficient(config.d, config.period, config.grid_size)
    r = parse_coefficient(config.r, config.period, config.grid_size) if need_r else None
    return d, r


def _run_speed(config: RunConfig):
    d, r = _coefficients(config)
    result = speed_mod.minimal_speed(d, r)
    gap = result.c_star - result.lower_bound
    write_csv(
        config.output,
        ["c_star", "lambda_star", "lower_bound", "gap", "grid_size", "richardson_estimate"],
        [[result.c_star, result.lambda_star, result.lower_bound, gap,
          result.grid_size, result.richardson_estimate]],
        config,
    )
    if not config.no_plot:
        plots.plot_speed(d, r, result, _figure_path(config.output))


def _run_verify_equality(config: RunConfig):
    d, r = _coefficients(config)
    report = speed_mod.equality_report(d, r)
    bound = speed_mod.lower_bound(d, r)
    write_csv(
        config.output,
        ["condition_residual", "speed_gap", "lambda0", "eigenfunction_deviation", "lower_bound"],
        [[report.condition_residual, report.speed_gap, report.lambda0,
          report.eigenfunction_deviation, bound]],
        config,
    )
    if not config.no_plot:
        plots.plot_equality(d, r, report, _figure_path(config.output))


def _run_optimize(config: RunConfig):
    d, _ = _coefficients(config, need_r=False)
    r_d = optimal.optimal_growth(d, config.alpha)
    residual = speed_mod.condition_residual(d, r_d)
    rows = [[j, x, v] for j, (x, v) in enumerate(zip(r_d.grid(), r_d.samples))]
    write_csv(
        config.output,
        ["j", "x", "r_d"],
        rows,
        config,
        extra_footer=[
            f"# mean_r_d = {_fmt(float(np.mean(r_d.samples)))}",
            f"# condition_residual = {_fmt(residual)}",
        ],
    )
    if not config.no_plot:
        plots.plot_optimal(d, r_d, _figure_path(config.output))


def _run_constancy(config: RunConfig):
    d, _ = _coefficients(config, need_r=False)
    result = optimal.constancy_test(d, config.alpha)
    write_csv(
        config.output,
        ["deviation", "verdict"],
        [[result.deviation, result.verdict]],
        config,
    )
    if not config.no_plot:
        r_d = optimal.optimal_growth(d, config.alpha)
        lam0 = math.sqrt(config.alpha / means(d).harmonic_mean)
        pair = principal_eigenpair(assemble_operator(d, r_d, lam0))
        plots.plot_constancy(d.grid(), pair.psi, result.deviation, result.verdict,
                             _figure_path(config.output))


def _run_perturb(config: RunConfig):
    d, _ = _coefficients(config, need_r=False)
    epsilons = _parse_float_list("epsilons", config.epsilons)
    study = optimal.perturbation_study(d, config.alpha, epsilons, config.seed)
    rows = [[t.eta_id, t.epsilon, t.speed, t.delta] for t in study.trials]
    write_csv(
        config.output,
        ["eta_id", "epsilon", "speed", "delta"],
        rows,
        config,
        extra_footer=[
            f"# base_speed = {_fmt(study.base_speed)}",
            f"# min_delta = {_fmt(study.min_delta)}",
        ],
    )
    if not config.no_plot:
        plots.plot_perturbations(study, _figure_path(config.output))


def _run_scan_period(config: RunConfig):
    d, r = _coefficients(config)
    ls = _parse_float_list("Ls", config.Ls)
    scan = optimal.period_scan(d, r, ls)
    rows = [[L, c, scan.limit_value] for L, c in zip(scan.Ls, scan.speeds)]
    write_csv(
        config.output,
        ["L", "c_star_L", "lower_bound"],
        rows,
        config,
        extra_footer=[
            f"# second_difference_at_zero = {_fmt(scan.second_difference_at_zero)}",
            f"# second_difference_tolerance = {_fmt(scan.second_difference_tolerance())}",
            f"# second_difference_positive = "
            f"{_fmt(scan.second_difference_at_zero > scan.second_difference_tolerance())}",
        ],
    )
    if not config.no_plot:
        plots.plot_period_scan(scan, _figure_path(config.output))


def _run_simulate(config: RunConfig):
    d, r = _coefficients(config)
    sim_config = pde.SimulationConfig(
        d=d,
        r=r,
        domain_half_width=config.domain_half_width,
        mesh=config.mesh,
        dt=config.dt,
        t_end=config.t_end,
        threshold=config.threshold,
        fit_window=(config.fit_start, config.fit_end),
        initial_data=pde.InitialBump(config.init_center, config.init_half_width, config.init_height),
        snapshot_interval=config.snapshot_interval,
    )
    run = pde.simulate(sim_config)
    front = run.front
    rows = [[t, p] for t, p in zip(front.times, front.positions)]
    snap_path = str(Path(config.output).with_suffix("")) + "_snapshots.txt"
    pde.write_snapshots(snap_path, run)
    write_csv(
        config.output,
        ["t", "front_position"],
        rows,
        config,
        extra_footer=[
            f"# fitted_speed = {_fmt(front.fitted_speed)}",
            f"# fit_residual = {_fmt(front.fit_residual)}",
            f"# boundary_contamination = {_fmt(front.boundary_contamination)}",
            f"# snapshots = {snap_path}",
        ],
    )
    if not config.no_plot:
        plots.plot_simulation(run, _figure_path(config.output))


def _run_stationary(config: RunConfig):
    d, r = _coefficients(config)
    state = pde.stationary_state(d, r)
    rows = [[j, x, p] for j, (x, p) in enumerate(zip(d.grid(), state.p))]
    write_csv(
        config.output,
        ["j", "x", "p"],
        rows,
        config,
        extra_footer=[f"# residual = {_fmt(state.residual)}"],
    )
    if not config.no_plot:
        plots.plot_stationary(d.grid(), state.p, state.residual, _figure_path(config.output))


_DISPATCH = {
    "speed": _run_speed,
    "optimize": _run_optimize,
    "verify-equality": _run_verify_equality,
    "constancy": _run_constancy,
    "perturb": _run_perturb,
    "scan-period": _run_scan_period,
    "simulate": _run_simulate,
    "stationary": _run_stationary,
}


def run(config: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    try:
        _DISPATCH[config.command](config)
    except (ConfigError, CoefficientError, PreconditionError) as exc:
        print(f"kppspeed {config.command}: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"kppspeed {config.command}: numerical failure in {exc.stage}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"kppspeed {config.command}: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    try:
        config = load_config(argv if argv is not None else sys.argv[1:])
    except (ConfigError, CoefficientError, PreconditionError) as exc:
        print(f"kppspeed: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
