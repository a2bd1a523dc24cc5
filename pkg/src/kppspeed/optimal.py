"""Optimal growth coefficients and the structure theory around them.

Given a positive diffusion coefficient d and a target mean alpha, the speed
minimizer over growth coefficients with that mean is

    r_d(x) = alpha * (2 - harm(d) / d(x)),

which satisfies the equality condition pointwise, is invariant under
d -> k*d, and pins the speed to the lower bound 2*sqrt(harm(d)*alpha).
This module builds r_d and provides the surrounding numerical experiments:
perturbation studies, the eigenfunction constancy dichotomy, and the
period scan toward the homogenization limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import speed as speed_mod
from .coeffs import (
    PeriodicCoefficient,
    derived_coefficient,
    linear_combination,
    means,
    require_positive,
    rescale_period,
    scaled,
)
from .eigen import assemble_operator, principal_eigenpair
from .errors import NumericalError, PreconditionError

CONSTANT_DEVIATION_TOL = 1e-6


@dataclass(frozen=True)
class PerturbationTrial:
    eta_id: int
    epsilon: float
    speed: float
    delta: float


@dataclass(frozen=True)
class PerturbationStudy:
    base_speed: float
    trials: tuple
    min_delta: float


@dataclass(frozen=True)
class ConstancyResult:
    deviation: float
    verdict: str  # "constant" | "nonconstant"


@dataclass(frozen=True)
class PeriodScan:
    Ls: tuple
    speeds: tuple
    limit_value: float
    second_difference_at_zero: float

    def second_difference_tolerance(self, per_point_error: float = 1e-6) -> float:
        """Noise bound for the second difference given a per-speed error."""
        w = _second_difference_weights(self.Ls[0], self.Ls[1], self.Ls[2])
        return per_point_error * float(np.sum(np.abs(w)))


def optimal_growth(d: PeriodicCoefficient, alpha: float) -> PeriodicCoefficient:
    """The speed-minimizing growth coefficient with mean alpha, on d's grid.

    Built from the discrete harmonic mean of d, so its discrete mean is
    alpha to rounding and the equality condition holds exactly on the grid.
    """
    require_positive(d)
    if not (np.isfinite(alpha) and alpha > 0):
        raise PreconditionError(f"alpha must be positive, got {alpha}")
    harm = means(d).harmonic_mean

    def evaluate(x):
        return alpha * (2.0 - harm / d.evaluate(x))

    return derived_coefficient(
        evaluate, d.period, d.grid_size,
        source=f"optimal-growth(alpha={alpha!r}) for [{d.source}]",
    )


def scale_invariance_check(d: PeriodicCoefficient, alpha: float, k: float) -> float:
    """Sup-norm of optimal_growth(k*d) - optimal_growth(d); zero in exact arithmetic."""
    if not (np.isfinite(k) and k > 0):
        raise PreconditionError(f"k must be positive, got {k}")
    base = optimal_growth(d, alpha)
    rescaled = optimal_growth(scaled(d, k), alpha)
    return float(np.max(np.abs(rescaled.samples - base.samples)))


def _fourier_perturbations(period: float, grid_size: int, seed: int, count: int = 10, orders: int = 4):
    """Mean-zero random trigonometric bumps, normalized to unit sup-norm."""
    rng = np.random.default_rng(seed)
    dense = np.arange(4096) * (period / 4096)
    etas = []
    for eta_id in range(count):
        coeff = rng.uniform(-1.0, 1.0, size=(orders, 2))

        def evaluate(x, coeff=coeff):
            x = np.asarray(x, dtype=float)
            total = np.zeros_like(x)
            for k in range(1, orders + 1):
                arg = 2.0 * math.pi * k * x / period
                total += coeff[k - 1, 0] * np.cos(arg) + coeff[k - 1, 1] * np.sin(arg)
            return total

        peak = float(np.max(np.abs(evaluate(dense))))
        etas.append(
            derived_coefficient(
                lambda x, evaluate=evaluate, peak=peak: evaluate(x) / peak,
                period, grid_size, source=f"perturbation #{eta_id} (seed {seed})",
            )
        )
    return etas


def perturbation_study(
    d: PeriodicCoefficient, alpha: float, epsilons, seed: int
) -> PerturbationStudy:
    """Speed changes under mean-zero perturbations of the optimal growth.

    Each of 10 seeded low-order trigonometric bumps eta (unit sup-norm) is
    added as r_d + eps*eta for every requested eps; perturbed coefficients
    keep mean alpha because the bumps are mean-zero, and they may change
    sign, which is admissible. Deltas are measured against the unperturbed
    speed with the same estimator.
    """
    r_d = optimal_growth(d, alpha)
    base = speed_mod.minimal_speed(d, r_d).richardson_estimate
    etas = _fourier_perturbations(d.period, d.grid_size, seed)
    trials = []
    for eta_id, eta in enumerate(etas):
        for eps in epsilons:
            perturbed = linear_combination(
                r_d, eta, float(eps),
                source=f"{r_d.source} + {float(eps)!r}*eta{eta_id}",
            )
            try:
                result = speed_mod.minimal_speed(d, perturbed)
            except NumericalError as exc:
                raise NumericalError(
                    exc.stage, f"perturbation eta{eta_id}, eps={eps}: {exc}"
                ) from exc
            value = result.richardson_estimate
            trials.append(
                PerturbationTrial(
                    eta_id=eta_id, epsilon=float(eps), speed=value, delta=value - base
                )
            )
    min_delta = min(t.delta for t in trials) if trials else 0.0
    return PerturbationStudy(base_speed=base, trials=tuple(trials), min_delta=min_delta)


def constancy_test(d: PeriodicCoefficient, alpha: float) -> ConstancyResult:
    """Eigenfunction flatness for the pair (d, r_d) at the optimal decay rate.

    The max-normalized principal eigenfunction is constant exactly when d
    is constant; ``deviation`` is its max minus min.
    """
    r_d = optimal_growth(d, alpha)
    harm = means(d).harmonic_mean
    lam0 = math.sqrt(alpha / harm)
    pair = principal_eigenpair(assemble_operator(d, r_d, lam0))
    deviation = float(np.max(pair.psi) - np.min(pair.psi))
    verdict = "constant" if deviation < CONSTANT_DEVIATION_TOL else "nonconstant"
    return ConstancyResult(deviation=deviation, verdict=verdict)


def _second_difference_weights(l1: float, l2: float, l3: float) -> np.ndarray:
    """Three-point second-derivative weights on a nonuniform stencil."""
    return np.array(
        [
            2.0 / ((l2 - l1) * (l3 - l1)),
            -2.0 / ((l2 - l1) * (l3 - l2)),
            2.0 / ((l3 - l2) * (l3 - l1)),
        ]
    )


def period_scan(d: PeriodicCoefficient, r: PeriodicCoefficient, Ls) -> PeriodScan:
    """Speeds of the dilated pair (d_L, r_L) over an increasing list of periods.

    Speeds are Richardson-extrapolated per point. The curvature estimate at
    L -> 0 uses the three smallest periods; it vanishes (to noise) exactly
    when the pair satisfies the equality condition and is positive
    otherwise.
    """
    Ls = [float(L) for L in Ls]
    if len(Ls) < 3:
        raise PreconditionError("period scan needs at least three periods")
    if any(L <= 0 for L in Ls) or any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise PreconditionError("periods must be positive and strictly increasing")

    md, mr = means(d), means(r)
    require_positive(d)
    limit = 2.0 * math.sqrt(md.harmonic_mean * mr.arithmetic_mean)

    speeds = []
    for L in Ls:
        d_l = rescale_period(d, L)
        r_l = rescale_period(r, L)
        try:
            speeds.append(speed_mod.minimal_speed(d_l, r_l).richardson_estimate)
        except NumericalError as exc:
            raise NumericalError(exc.stage, f"period L={L}: {exc}") from exc

    w = _second_difference_weights(Ls[0], Ls[1], Ls[2])
    second = float(w @ np.array(speeds[:3]))
    return PeriodScan(
        Ls=tuple(Ls),
        speeds=tuple(speeds),
        limit_value=limit,
        second_difference_at_zero=second,
    )
