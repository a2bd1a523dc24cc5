"""Direct simulation of the reaction-diffusion Cauchy problem.

Solves u_t = (d(x) u_x)_x + (r(x) - u) u on [-X, X] with homogeneous
Dirichlet far-field boundaries and compactly supported initial data,
tracks the rightmost threshold crossing, and fits its asymptotic speed.
The periodic stationary state p(x) (the invaded-state profile) is computed
separately by a damped Newton iteration on one period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .coeffs import PeriodicCoefficient, means, require_positive
from .errors import NumericalError, PreconditionError

NEWTON_TOL = 1e-10
NEWTON_MAX_STEPS = 50
BOUNDARY_GUARD_PERIODS = 5.0


@dataclass(frozen=True)
class StationaryState:
    p: np.ndarray
    residual: float

    def __post_init__(self):
        self.p.setflags(write=False)


@dataclass(frozen=True)
class InitialBump:
    """Compactly supported nonnegative hump height*cos^2 on [center +- half_width]."""

    center: float = 0.0
    half_width: float = 5.0
    height: float = 0.5

    def profile(self, x: np.ndarray) -> np.ndarray:
        scaled = (np.asarray(x, dtype=float) - self.center) / self.half_width
        bump = np.where(np.abs(scaled) < 1.0, np.cos(0.5 * math.pi * scaled) ** 2, 0.0)
        return self.height * bump


@dataclass(frozen=True)
class SimulationConfig:
    d: PeriodicCoefficient
    r: PeriodicCoefficient
    domain_half_width: float = 400.0
    mesh: int = 0            # 0: choose from points-per-period rule
    dt: float = 0.0          # 0: choose from the stepper's default rule
    t_end: float = 150.0
    threshold: float = 0.0   # 0: 0.01 * mean(r)
    fit_window: tuple = (0.5, 1.0)
    initial_data: InitialBump = field(default_factory=InitialBump)
    snapshot_interval: float = 0.0  # 0: t_end / 50

    def resolved(self) -> "SimulationConfig":
        """Fill the rule-based defaults: >= 64 points per period, dt <= 0.25*dx."""
        mesh = self.mesh
        if mesh == 0:
            mesh = int(math.ceil(2.0 * self.domain_half_width / self.d.period * 64.0)) + 1
        dt = self.dt
        if dt == 0.0:
            dx = 2.0 * self.domain_half_width / (mesh - 1)
            dt = min(0.1, 0.25 * dx)
        threshold = self.threshold
        if threshold == 0.0:
            threshold = 0.01 * means(self.r).arithmetic_mean
        interval = self.snapshot_interval
        if interval == 0.0:
            interval = self.t_end / 50.0
        return SimulationConfig(
            d=self.d, r=self.r, domain_half_width=self.domain_half_width,
            mesh=mesh, dt=dt, t_end=self.t_end, threshold=threshold,
            fit_window=self.fit_window, initial_data=self.initial_data,
            snapshot_interval=interval,
        )


@dataclass(frozen=True)
class FrontTrajectory:
    times: np.ndarray
    positions: np.ndarray
    fitted_speed: float
    fit_residual: float
    slope_stderr: float
    boundary_contamination: bool

    def __post_init__(self):
        self.times.setflags(write=False)
        self.positions.setflags(write=False)


@dataclass(frozen=True)
class SimulationRun:
    config: SimulationConfig
    x: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray  # shape (len(snapshot_times), mesh)
    front: FrontTrajectory

    def __post_init__(self):
        self.x.setflags(write=False)
        self.snapshot_times.setflags(write=False)
        self.snapshots.setflags(write=False)


@dataclass(frozen=True)
class SpreadingSpeedEstimate:
    speed: float
    ci_halfwidth: float
    fast_ray_max: float   # sup of u along x = 1.2*speed*t over the last quarter
    slow_ray_min: float   # inf of u along x = 0.8*speed*t over the last quarter


def stationary_state(d: PeriodicCoefficient, r: PeriodicCoefficient) -> StationaryState:
    """Positive periodic solution of (d p')' + (r - p) p = 0 by damped Newton.

    The Jacobian reuses the conservative flux discretization; the initial
    guess max(mean r, max r) sits above the solution so the first steps are
    well damped.
    """
    require_positive(d)
    mr = means(r)
    if mr.arithmetic_mean <= 0.0:
        raise PreconditionError("growth coefficient must have positive mean")
    n = d.grid_size
    h = d.spacing
    d_mid = d.midpoint_values()
    d_mid_minus = np.roll(d_mid, 1)

    idx = np.arange(n)
    lap = np.zeros((n, n))
    lap[idx, idx] = -(d_mid + d_mid_minus) / h**2
    lap[idx, (idx - 1) % n] = d_mid_minus / h**2
    lap[idx, (idx + 1) % n] = d_mid / h**2

    def residual_vector(p):
        return lap @ p + (r.samples - p) * p

    p = np.full(n, max(mr.arithmetic_mean, float(np.max(r.samples))))
    # the residual of the exact solution still carries ||lap|| * eps of
    # rounding, which dominates 1e-10 on very fine grids
    scale = float(np.max(np.sum(np.abs(lap), axis=1)) + np.max(np.abs(r.samples)))
    floor = 64.0 * np.finfo(float).eps * scale
    tol = max(NEWTON_TOL, floor)
    res = residual_vector(p)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(NEWTON_MAX_STEPS):
        if res_norm < tol:
            break
        jac = lap + np.diag(r.samples - 2.0 * p)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("newton", f"singular Jacobian: {exc}") from exc
        t = 1.0
        while t > 2.0**-30:
            trial = p + t * delta
            trial_res = residual_vector(trial)
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < res_norm:
                p, res, res_norm = trial, trial_res, trial_norm
                break
            t *= 0.5
        else:
            if res_norm < 16.0 * tol:  # at the rounding floor already
                break
            raise NumericalError("newton", "damping stalled; the zero state may not be unstable")
    else:
        raise NumericalError(
            "newton", f"no convergence after {NEWTON_MAX_STEPS} damped steps "
            f"(residual {res_norm:.3e})"
        )
    if np.min(p) <= 0.0:
        raise NumericalError("newton", "stationary profile lost positivity")
    return StationaryState(p=p, residual=res_norm)


def _front_position(x: np.ndarray, u: np.ndarray, threshold: float) -> float:
    """Rightmost threshold crossing, linearly interpolated between cells."""
    above = np.nonzero(u >= threshold)[0]
    if above.size == 0:
        return float(x[0])
    i = int(above[-1])
    if i == x.size - 1:
        return float(x[-1])
    du = u[i] - u[i + 1]
    frac = (u[i] - threshold) / du if du > 0 else 0.0
    return float(x[i] + frac * (x[i + 1] - x[i]))


def simulate(config: SimulationConfig) -> SimulationRun:
    """Advance the Cauchy problem and track the front.

    Time stepping is IMEX: backward Euler on the conservative diffusion
    flux (one tridiagonal solve per step), explicit logistic reaction.
    Both halves preserve nonnegativity at the default step sizes. Front
    positions are recorded every step; the speed is the least-squares slope
    over the fit window, flagged if the front comes within five periods of
    the right boundary during that window.
    """
    config = config.resolved()
    d, r = config.d, config.r
    require_positive(d)
    big_x = config.domain_half_width
    m = config.mesh
    dt = config.dt
    if m < 3:
        raise PreconditionError(f"mesh must have at least 3 points, got {m}")
    if not (0 < config.fit_window[0] < config.fit_window[1] <= 1.0):
        raise PreconditionError(f"fit window must satisfy 0 < start < end <= 1, got {config.fit_window}")

    floor = stationary_state(d, r)
    p_min = float(np.min(floor.p))
    if not (0.0 < config.threshold < p_min):
        raise PreconditionError(
            f"front threshold {config.threshold} must lie in (0, min p) = (0, {p_min:.6g})"
        )

    x = np.linspace(-big_x, big_x, m)
    dx = x[1] - x[0]
    u = config.initial_data.profile(x)
    if np.min(u) < 0.0 or np.max(u) == 0.0:
        raise PreconditionError("initial data must be nonnegative and not identically zero")

    d_mid = d.evaluate(x[:-1] + 0.5 * dx)          # d at cell interfaces
    r_nodes = r.evaluate(x)

    # backward-Euler system (I - dt*A) u = rhs, Dirichlet rows pinned to zero
    main = np.ones(m)
    lower = np.zeros(m)
    upper = np.zeros(m)
    interior = np.arange(1, m - 1)
    main[interior] = 1.0 + dt * (d_mid[interior] + d_mid[interior - 1]) / dx**2
    lower[interior] = -dt * d_mid[interior - 1] / dx**2
    upper[interior] = -dt * d_mid[interior] / dx**2
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = main
    ab[2, :-1] = lower[1:]

    steps = int(round(config.t_end / dt))
    snap_every = max(1, int(round(config.snapshot_interval / dt)))
    guard = big_x - BOUNDARY_GUARD_PERIODS * d.period

    times = np.empty(steps + 1)
    positions = np.empty(steps + 1)
    times[0] = 0.0
    positions[0] = _front_position(x, u, config.threshold)
    snapshot_times = [0.0]
    snapshots = [u.copy()]

    for step in range(1, steps + 1):
        rhs = u + dt * (r_nodes - u) * u
        rhs[0] = 0.0
        rhs[-1] = 0.0
        u = solve_banded((1, 1), ab, rhs)
        low = float(np.min(u))
        if low < -1e-12:
            raise NumericalError(
                "stepper", f"negative density {low:.3e} at t={step * dt:.4g}; reduce dt"
            )
        if low < 0.0:
            # rounding dust in the far field; both substeps preserve
            # positivity in exact arithmetic
            u = np.maximum(u, 0.0)
        t = step * dt
        times[step] = t
        positions[step] = _front_position(x, u, config.threshold)
        if step % snap_every == 0 or step == steps:
            snapshot_times.append(t)
            snapshots.append(u.copy())

    window = (times >= config.fit_window[0] * config.t_end) & (
        times <= config.fit_window[1] * config.t_end
    )
    tw, pw = times[window], positions[window]
    if tw.size < 3:
        raise PreconditionError("fit window contains fewer than 3 samples")
    slope, intercept = np.polyfit(tw, pw, 1)
    fitted = pw - (slope * tw + intercept)
    rms = float(np.sqrt(np.mean(fitted**2)))
    dof = max(tw.size - 2, 1)
    stderr = float(
        np.sqrt(np.sum(fitted**2) / dof / np.sum((tw - np.mean(tw)) ** 2))
    )
    contaminated = bool(np.any(pw > guard))

    front = FrontTrajectory(
        times=times,
        positions=positions,
        fitted_speed=float(slope),
        fit_residual=rms,
        slope_stderr=stderr,
        boundary_contamination=contaminated,
    )
    return SimulationRun(
        config=config,
        x=x,
        snapshot_times=np.array(snapshot_times),
        snapshots=np.array(snapshots),
        front=front,
    )


def spreading_speed_estimate(config: SimulationConfig) -> SpreadingSpeedEstimate:
    """Fitted front speed with a confidence half-width and ray diagnostics.

    The half-width is three standard errors of the fitted slope. The ray
    values confirm the spreading dichotomy qualitatively: over the last
    quarter of the run the solution should be below 1e-6 along the ray 20%
    faster than the fitted speed and above the threshold along the ray 20%
    slower.
    """
    run = simulate(config)
    cfg = run.config
    speed = run.front.fitted_speed
    window = run.snapshot_times >= 0.75 * cfg.t_end
    fast_max = 0.0
    slow_min = float("inf")
    for t, u in zip(run.snapshot_times[window], run.snapshots[window]):
        fast_x = 1.2 * speed * t
        slow_x = 0.8 * speed * t
        fast_u = float(np.interp(fast_x, run.x, u)) if fast_x <= run.x[-1] else 0.0
        slow_u = float(np.interp(slow_x, run.x, u))
        fast_max = max(fast_max, fast_u)
        slow_min = min(slow_min, slow_u)
    return SpreadingSpeedEstimate(
        speed=speed,
        ci_halfwidth=3.0 * run.front.slope_stderr,
        fast_ray_max=fast_max,
        slow_ray_min=slow_min,
    )


def write_snapshots(path, run: SimulationRun) -> None:
    """Dump snapshots as 't x u' rows, one blank-line-separated block each."""
    with open(path, "w") as handle:
        for index, (t, u) in enumerate(zip(run.snapshot_times, run.snapshots)):
            if index:
                handle.write("\n")
            for xi, ui in zip(run.x, u):
                handle.write(f"{t:.16e} {xi:.16e} {ui:.16e}\n")
