"""Figure rendering for the CLI report path.

Each command gets one PNG next to its CSV. Figures are plain matplotlib
(Agg backend) and deliberately minimal: coefficients, eigenfunctions,
scan curves, front trajectories.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _new_axes(title):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def plot_coefficients(d, r, path, psi=None, title="coefficients"):
    fig, ax = _new_axes(title)
    x = d.grid()
    ax.plot(x, d.samples, label="d(x)")
    ax.plot(x, r.samples, label="r(x)")
    if psi is not None:
        ax.plot(x, psi, label="eigenfunction", linestyle="--")
    ax.set_xlabel("x")
    ax.legend()
    _save(fig, path)


def plot_speed(d, r, result, path):
    title = (
        f"c* = {result.c_star:.6f} at lambda* = {result.lambda_star:.6f} "
        f"(bound {result.lower_bound:.6f})"
    )
    plot_coefficients(d, r, path, title=title)


def plot_equality(d, r, report, path):
    fig, ax = _new_axes(
        f"condition residual {report.condition_residual:.2e}, "
        f"speed gap {report.speed_gap:.2e}"
    )
    x = d.grid()
    mr = float(np.mean(r.samples))
    harm = 1.0 / float(np.mean(1.0 / d.samples))
    ax.plot(x, r.samples / mr + harm / d.samples - 2.0, label="r/<r> + <d>_h/d - 2")
    ax.axhline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("x")
    ax.legend()
    _save(fig, path)


def plot_optimal(d, r_d, path):
    plot_coefficients(d, r_d, path, title="diffusion and its optimal growth")


def plot_constancy(x, psi, deviation, verdict, path):
    fig, ax = _new_axes(f"eigenfunction deviation {deviation:.3e} ({verdict})")
    ax.plot(x, psi)
    ax.set_xlabel("x")
    ax.set_ylabel("psi (max-normalized)")
    _save(fig, path)


def plot_perturbations(study, path):
    fig, ax = _new_axes(f"speed increase under perturbation (base {study.base_speed:.6f})")
    eps = [t.epsilon for t in study.trials]
    deltas = [t.delta for t in study.trials]
    ax.scatter(eps, deltas, s=14)
    ax.axhline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("speed - base speed")
    _save(fig, path)


def plot_period_scan(scan, path):
    fig, ax = _new_axes("speed versus period")
    ax.semilogx(scan.Ls, scan.speeds, marker="o", label="c*(L)")
    ax.axhline(scan.limit_value, color="gray", linestyle=":", label="small-period limit")
    ax.set_xlabel("L")
    ax.set_ylabel("c*")
    ax.legend()
    _save(fig, path)


def plot_simulation(run, path):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    front = run.front
    ax1.plot(front.times, front.positions, linewidth=0.9)
    lo, hi = run.config.fit_window
    t_end = run.config.t_end
    ax1.axvspan(lo * t_end, hi * t_end, alpha=0.15, color="green", label="fit window")
    ax1.set_xlabel("t")
    ax1.set_ylabel("front position")
    ax1.set_title(f"fitted speed {front.fitted_speed:.4f}")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    step = max(1, len(run.snapshot_times) // 8)
    for t, u in zip(run.snapshot_times[::step], run.snapshots[::step]):
        ax2.plot(run.x, u, linewidth=0.8, label=f"t={t:.0f}")
    ax2.set_xlabel("x")
    ax2.set_ylabel("u")
    ax2.set_title("snapshots")
    ax2.legend(fontsize=7)
    ax2.grid(True, alpha=0.3)
    _save(fig, path)


def plot_stationary(x, p, residual, path):
    fig, ax = _new_axes(f"stationary profile (residual {residual:.2e})")
    ax.plot(x, p)
    ax.set_xlabel("x")
    ax.set_ylabel("p(x)")
    _save(fig, path)
