"""Discretization and principal eigenvalue of the exponential-ansatz operator.

The operator acting on periodic psi is

    -(d psi')' - 2*lam*d*psi' - (lam^2*d + lam*d' + r)*psi,

discretized with conservative fluxes for the divergence term, centered
differences for the convection term, and spectral differentiation for d'.
Its principal eigenvalue (the unique one with a positive periodic
eigenfunction) is found by inverse power iteration; an independent
variational route through the constrained functional

    I(phi) = int d|phi'|^2 - int r phi^2 - lam^2 L^2 / int 1/(d phi^2)

over positive phi with int phi^2 = 1 serves as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_banded

from .coeffs import PeriodicCoefficient
from .errors import NumericalError, PreconditionError

EIGEN_CHANGE_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-8
EIGEN_MAX_ITER = 10_000

DESCENT_FLOOR = 1e-8
DESCENT_STOP_TOL = 1e-12
DESCENT_STOP_RUN = 20
DESCENT_MAX_ITER = 400_000


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense N x N discretization; banded except for the periodic wrap corners."""

    lam: float
    entries: np.ndarray
    grid_size: int
    period: float

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class EigenPair:
    """Principal eigenvalue with its positive eigenfunction, max-normalized."""

    k: float
    psi: np.ndarray
    residual: float
    iterations: int

    def __post_init__(self):
        self.psi.setflags(write=False)


@dataclass(frozen=True)
class VariationalResult:
    """Minimum of the constrained functional and the minimizer found."""

    value: float
    phi: np.ndarray
    el_residual: float

    def __post_init__(self):
        self.phi.setflags(write=False)


def _check_pair(d: PeriodicCoefficient, r: PeriodicCoefficient) -> None:
    if abs(d.period - r.period) > 1e-12 * max(d.period, r.period):
        raise PreconditionError(f"period mismatch: {d.period} vs {r.period}")
    if d.grid_size != r.grid_size:
        raise PreconditionError(f"grid size mismatch: {d.grid_size} vs {r.grid_size}")
    if np.min(d.samples) <= 0.0:
        raise PreconditionError("diffusion coefficient must be positive on the grid")


def assemble_operator(d: PeriodicCoefficient, r: PeriodicCoefficient, lam: float) -> OperatorMatrix:
    """Matrix rows implementing the operator at decay rate ``lam``.

    Row j couples j-1, j, j+1 with periodic wrap-around:

        sub  = -d_{j-1/2}/h^2 + lam*d_j/h
        diag = (d_{j+1/2}+d_{j-1/2})/h^2 - (lam^2 d_j + lam d'_j + r_j)
        sup  = -d_{j+1/2}/h^2 - lam*d_j/h
    """
    _check_pair(d, r)
    if not (np.isfinite(lam) and lam > 0):
        raise PreconditionError(f"lam must be positive, got {lam}")
    n = d.grid_size
    h = d.spacing
    d_mid = d.midpoint_values()          # d at x_{j+1/2}
    d_mid_minus = np.roll(d_mid, 1)      # d at x_{j-1/2}
    d_prime = d.derivative_samples()

    sub = -d_mid_minus / h**2 + lam * d.samples / h
    sup = -d_mid / h**2 - lam * d.samples / h
    diag = (d_mid + d_mid_minus) / h**2 - (lam**2 * d.samples + lam * d_prime + r.samples)

    entries = np.zeros((n, n))
    idx = np.arange(n)
    entries[idx, idx] = diag
    entries[idx, (idx - 1) % n] = sub
    entries[idx, (idx + 1) % n] = sup
    return OperatorMatrix(lam=float(lam), entries=entries, grid_size=n, period=d.period)


class _ShiftedSolver:
    """Solves (A - sigma*I) x = b for tridiagonal-plus-periodic-corners A.

    The tridiagonal part is handled by a banded solve and the two wrap
    corners by the Sherman-Morrison-Woodbury correction, so one inverse
    iteration costs O(N) instead of O(N^2).
    """

    def __init__(self, a: np.ndarray, sigma: float):
        n = a.shape[0]
        ab = np.zeros((3, n))
        ab[0, 1:] = np.diag(a, 1)
        ab[1, :] = np.diag(a) - sigma
        ab[2, :-1] = np.diag(a, -1)
        self.ab = ab
        u = np.zeros((n, 2))
        u[0, 0] = a[0, n - 1]
        u[n - 1, 1] = a[n - 1, 0]
        v = np.zeros((n, 2))
        v[n - 1, 0] = 1.0
        v[0, 1] = 1.0
        self.v = v
        self.w = solve_banded((1, 1), ab, u)
        self.capacitance_inv = np.linalg.inv(np.eye(2) + v.T @ self.w)

    def solve(self, b: np.ndarray) -> np.ndarray:
        y = solve_banded((1, 1), self.ab, b)
        return y - self.w @ (self.capacitance_inv @ (self.v.T @ y))


class _DenseSolver:
    def __init__(self, a: np.ndarray, sigma: float):
        self.lu = lu_factor(a - sigma * np.eye(a.shape[0]))

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b)


def principal_eigenpair(op: OperatorMatrix) -> EigenPair:
    """Perron eigenpair of the discretized operator by inverse power iteration.

    The shift is the Gershgorin lower bound of the matrix (diagonal minus the
    absolute off-diagonal row sum), nudged down slightly because the bound is
    attained exactly for constant coefficients. Iteration stops once the
    eigenvector settles to 1e-12 relative change and the residual meets the
    contract; a converged eigenvector with mixed signs means the grid is too
    coarse to carry the positive eigenfunction.
    """
    a = op.entries
    n = op.grid_size
    diag = np.diag(a)
    radius = np.sum(np.abs(a), axis=1) - np.abs(diag)
    sigma = float(np.min(diag - radius))
    sigma -= 1e-8 * max(1.0, abs(sigma))  # the bound is exact for constant d, r

    try:
        solver = _ShiftedSolver(a, sigma)
    except np.linalg.LinAlgError:
        # tridiagonal part singular at this shift; the corners fix that
        solver = _DenseSolver(a, sigma)

    # rounding floor: a residual below ||A|| * eps is unattainable in doubles,
    # which matters once h is tiny and the matrix norm is huge
    scale = float(np.max(np.sum(np.abs(a), axis=1)))
    floor = 64.0 * np.finfo(float).eps * scale

    v = np.full(n, 1.0 / np.sqrt(n))
    k = float("nan")
    residual = float("inf")
    settled = False
    for iteration in range(1, EIGEN_MAX_ITER + 1):
        w = solver.solve(v)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0.0:
            raise NumericalError("eigensolve", "inverse iteration produced a degenerate vector")
        w = w / norm
        if np.dot(w, v) < 0.0:
            w = -w
        change = float(np.max(np.abs(w - v)))
        v = w
        if change < EIGEN_CHANGE_TOL:
            settled = True
        if settled:
            av = a @ v
            k = float(np.dot(v, av))
            residual = float(np.max(np.abs(av - k * v))) / float(np.max(np.abs(v)))
            if residual <= max(EIGEN_RESIDUAL_TOL * max(1.0, abs(k)), floor):
                break
            if change == 0.0:
                raise NumericalError(
                    "eigensolve",
                    f"iteration reached a fixed point with residual {residual:.3e}",
                )
    else:
        raise NumericalError(
            "eigensolve",
            f"no convergence after {EIGEN_MAX_ITER} iterations (last change {change:.3e})",
        )

    psi = v * np.sign(v[np.argmax(np.abs(v))])
    if np.min(psi) <= 0.0:
        raise NumericalError(
            "eigensolve",
            "converged eigenvector changes sign; the discretization is too coarse",
        )
    psi = psi / np.max(psi)
    residual = float(np.max(np.abs(a @ psi - k * psi)))
    return EigenPair(k=k, psi=psi, residual=residual, iterations=iteration)


# ---------------------------------------------------------------------------
# Variational route
# ---------------------------------------------------------------------------


def _flux_divergence(phi: np.ndarray, d_mid: np.ndarray, h: float) -> np.ndarray:
    """-(d phi')' in conservative form on the periodic grid."""
    flux = d_mid * (np.roll(phi, -1) - phi) / h
    return -(flux - np.roll(flux, 1)) / h


def _functional_terms(phi, d_samples, d_mid, r_samples, lam, period, h):
    grad = (np.roll(phi, -1) - phi) / h
    dirichlet = h * np.sum(d_mid * grad**2)
    growth = h * np.sum(r_samples * phi**2)
    q = h * np.sum(1.0 / (d_samples * phi**2))
    value = dirichlet - growth - lam**2 * period**2 / q
    return value, q


def _el_expression(phi, d_samples, d_mid, r_samples, lam, period, h):
    """Left-hand side of the stationarity equation, and the functional value.

    Multiplying the expression by phi and integrating gives the functional
    value exactly on the discrete grid, so the projected gradient is the
    expression minus value*phi.
    """
    value, q = _functional_terms(phi, d_samples, d_mid, r_samples, lam, period, h)
    expr = (
        _flux_divergence(phi, d_mid, h)
        - r_samples * phi
        - (lam**2 * period**2 / q**2) / (d_samples * phi**3)
    )
    return expr, value


def euler_lagrange_residual(
    d: PeriodicCoefficient, r: PeriodicCoefficient, lam: float, phi: np.ndarray
) -> float:
    """Sup-norm defect of the stationarity equation at phi, relative to max phi.

    ``phi`` is expected normalized (trapezoid integral of phi^2 equal 1) and
    positive; the defect of the constant test function against a varying
    growth coefficient is then max|r - mean(r)| up to quadrature error.
    """
    _check_pair(d, r)
    phi = np.asarray(phi, dtype=float)
    h = d.spacing
    expr, value = _el_expression(
        phi, d.samples, d.midpoint_values(), r.samples, lam, d.period, h
    )
    return float(np.max(np.abs(expr - value * phi)) / np.max(np.abs(phi)))


def variational_value(
    d: PeriodicCoefficient, r: PeriodicCoefficient, lam: float
) -> VariationalResult:
    """Minimize the constrained functional by projected gradient descent.

    Starts from the constant profile 1/sqrt(L) (the exact minimizer in the
    equality case), clamps iterates at a small positive floor, renormalizes
    after every step, and backtracks by halving until the functional
    decreases. Stops after 20 consecutive steps with decrease below 1e-12.
    """
    _check_pair(d, r)
    if not (np.isfinite(lam) and lam > 0):
        raise PreconditionError(f"lam must be positive, got {lam}")
    n = d.grid_size
    h = d.spacing
    period = d.period
    d_samples = d.samples
    d_mid = d.midpoint_values()
    r_samples = r.samples

    phi = np.full(n, 1.0)
    phi /= np.sqrt(h * np.sum(phi**2))
    value, _ = _functional_terms(phi, d_samples, d_mid, r_samples, lam, period, h)

    step = h**2 / (4.0 * float(np.max(d_samples)))
    max_step = step * 1e4
    small_streak = 0
    for iteration in range(DESCENT_MAX_ITER):
        expr, value_check = _el_expression(phi, d_samples, d_mid, r_samples, lam, period, h)
        direction = expr - value_check * phi
        moved = False
        for _ in range(60):
            trial = np.maximum(phi - step * direction, DESCENT_FLOOR)
            trial /= np.sqrt(h * np.sum(trial**2))
            trial_value, _ = _functional_terms(trial, d_samples, d_mid, r_samples, lam, period, h)
            if trial_value < value:
                moved = True
                break
            step *= 0.5
        if moved:
            decrease = value - trial_value
            phi = trial
            value = trial_value
            step = min(step * 1.3, max_step)
        else:
            decrease = 0.0
            if iteration == 0:
                start_residual = float(np.max(np.abs(direction)) / np.max(phi))
                if start_residual > 1e-6 * max(1.0, abs(value)):
                    raise NumericalError(
                        "descent",
                        "no decrease from the flat start despite a large gradient "
                        f"(residual {start_residual:.3e})",
                    )
        small_streak = small_streak + 1 if decrease < DESCENT_STOP_TOL else 0
        if small_streak >= DESCENT_STOP_RUN:
            break

    residual = euler_lagrange_residual(d, r, lam, phi)
    return VariationalResult(value=value, phi=phi, el_residual=residual)
