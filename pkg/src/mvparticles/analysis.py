"""Post-processing of loss curves and particle samples.

Finite-difference loss rates, jump detection, distances between loss
curves, Gaussian kernel density estimates, convergence-order regression,
and an empirical check of the running-minimum density bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ModelParams, TheoryConstants
from .scheme import LossCurve, simulate_plain
from .stochastic import PathEnsemble

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceReport",
    "DensityEstimate",
    "DensityBoundReport",
    "JumpReport",
    "loss_derivative",
    "detect_jump",
    "metric_d1",
    "metric_d2",
    "metric_d3",
    "generalized_inverse",
    "silverman_bandwidth",
    "kde_density",
    "fit_order",
    "density_bound",
    "check_density_bound",
]


@dataclass(frozen=True)
class ConvergenceReport:
    mesh_sizes: np.ndarray
    errors: np.ndarray
    fitted_order: float
    ci95: tuple
    intercept: float = float("nan")
    stderr: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "mesh_sizes": [int(n) for n in self.mesh_sizes],
            "errors": [float(e) for e in self.errors],
            "fitted_order": float(self.fitted_order),
            "ci95": [float(self.ci95[0]), float(self.ci95[1])],
            "intercept": float(self.intercept),
            "stderr": float(self.stderr),
        }


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class JumpReport:
    index: int
    time: float
    size: float


# Loss rate and jumps ----------------------------------------------------------


def loss_derivative(curve: LossCurve) -> np.ndarray:
    """Finite-difference loss rate as an ``(n+1) x 2`` array of ``(t, L')``.

    Central differences inside, one-sided differences at the two ends.
    """
    t, v = curve.times, curve.values
    if t.size < 3:
        raise ValueError("loss_derivative needs at least 3 mesh points")
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    d[0] = (v[1] - v[0]) / (t[1] - t[0])
    d[-1] = (v[-1] - v[-2]) / (t[-1] - t[-2])
    return np.column_stack([t, d])


def detect_jump(curve: LossCurve) -> JumpReport:
    """Largest one-step increase; ties go to the earliest step."""
    inc = np.diff(curve.values)
    j = int(np.argmax(inc)) + 1
    return JumpReport(j, float(curve.times[j]), float(inc[j - 1]))


# Distances between loss curves --------------------------------------------------


def _same_horizon(a: LossCurve, b: LossCurve):
    if not math.isclose(a.horizon, b.horizon, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"curves have different horizons: {a.horizon} vs {b.horizon}")


def metric_d1(a: LossCurve, b: LossCurve) -> float:
    """Integral of ``|a - b|`` over ``[0, T]``.

    Exact for the left piecewise-constant extensions: both curves are
    constant on every cell of the merged mesh.
    """
    _same_horizon(a, b)
    grid = np.union1d(a.times, b.times)
    grid = grid[grid < min(a.horizon, b.horizon)]
    ia = np.searchsorted(a.times, grid, side="right") - 1
    ib = np.searchsorted(b.times, grid, side="right") - 1
    widths = np.diff(np.append(grid, a.horizon))
    return float(np.sum(np.abs(a.values[ia] - b.values[ib]) * widths))


def metric_d2(a: LossCurve, b: LossCurve) -> float:
    """Distance between the detected jump times."""
    return abs(detect_jump(a).time - detect_jump(b).time)


def generalized_inverse(curve: LossCurve, levels) -> np.ndarray:
    """``inf{t : L(t) >= level}``, or ``T`` where the level is never reached."""
    levels = np.asarray(levels, dtype=float)
    idx = np.searchsorted(curve.values, levels, side="left")
    out = np.full(levels.shape, curve.horizon)
    ok = idx < curve.values.size
    out[ok] = curve.times[idx[ok]]
    return out


def metric_d3(a: LossCurve, b: LossCurve, levels: int = 1001) -> float:
    """Sup distance between generalized inverses.

    The level grid spans ``[0, min(max a, max b)]`` so that both inverses
    stay finite.
    """
    _same_horizon(a, b)
    if not isinstance(levels, (int, np.integer)) or levels < 1:
        raise ValueError(f"levels must be a positive integer, got {levels!r}")
    top = min(a.values[-1], b.values[-1])
    if top <= 0:
        return 0.0
    grid = np.linspace(0.0, top, int(levels))
    return float(np.max(np.abs(generalized_inverse(a, grid) - generalized_inverse(b, grid))))


# Kernel density -----------------------------------------------------------------


def silverman_bandwidth(samples) -> float:
    """``0.9 * min(sd, IQR / 1.34) * N^(-1/5)``."""
    x = np.asarray(samples, dtype=float)
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        # heavy ties in the quartiles; fall back to the standard deviation
        spread = sd
    return 0.9 * spread * x.size ** (-0.2)


def kde_density(samples, grid, bandwidth: float | None = None, max_block: int = 1 << 22) -> DensityEstimate:
    """Gaussian kernel density estimate of ``samples`` evaluated on ``grid``.

    Grid points are processed in chunks so that no kernel matrix exceeds
    ``max_block`` entries.
    """
    x = np.asarray(samples, dtype=float).ravel()
    g = np.asarray(grid, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("kde_density needs at least two samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if np.ptp(x) == 0:
        raise ValueError("samples have zero spread")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not (math.isfinite(h) and h > 0):
        raise ValueError(f"bandwidth must be positive, got {h!r}")
    x = np.sort(x)
    vals = np.empty(g.size)
    cut = 8.0 * h
    chunk = max(1, max_block // x.size)
    for lo in range(0, g.size, chunk):
        gc = g[lo : lo + chunk]
        # kernel mass beyond 8 bandwidths is below 1e-14
        i0 = np.searchsorted(x, gc.min() - cut)
        i1 = np.searchsorted(x, gc.max() + cut)
        u = (gc[:, None] - x[None, i0:i1]) / h
        vals[lo : lo + chunk] = np.exp(-0.5 * u * u).sum(axis=1)
    vals /= x.size * h * math.sqrt(2 * math.pi)
    return DensityEstimate(g, vals, h)


# Convergence regression -----------------------------------------------------------


def fit_order(mesh_sizes, errors) -> ConvergenceReport:
    """Least-squares slope of ``log(error)`` on ``log(1/n)`` with a 95% t-interval."""
    n = np.asarray(mesh_sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    if n.shape != e.shape or n.ndim != 1:
        raise ValueError("mesh_sizes and errors must be 1-d of equal length")
    if n.size < 3:
        raise ValueError("fit_order needs at least 3 points")
    if np.any(n <= 0):
        raise ValueError("mesh sizes must be positive")
    if np.any(~(e > 0)) or np.any(~np.isfinite(e)):
        raise ValueError("errors must be finite and strictly positive")
    x = np.log(1.0 / n)
    y = np.log(e)
    res = stats.linregress(x, y)
    q = stats.t.ppf(0.975, n.size - 2)
    se = float(res.stderr)
    slope = float(res.slope)
    return ConvergenceReport(
        np.asarray(mesh_sizes, dtype=int),
        e,
        slope,
        (slope - q * se, slope + q * se),
        float(res.intercept),
        se,
    )


# Running-minimum density bound -----------------------------------------------------


@dataclass(frozen=True)
class DensityBoundReport:
    z: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray
    violations: np.ndarray
    time: float

    @property
    def n_violations(self) -> int:
        return int(np.count_nonzero(self.violations))


def density_bound(z, t: float, alpha: float, consts: TheoryConstants):
    """``B [(z v 0) + sqrt(2t/pi) + alpha B_tilde t^((1+beta)/2)]^beta``."""
    z = np.asarray(z, dtype=float)
    beta = consts.beta
    inner = np.maximum(z, 0.0) + math.sqrt(2 * t / math.pi) + alpha * consts.B_tilde * t ** ((1 + beta) / 2)
    return consts.B * inner**beta


def check_density_bound(
    params: ModelParams,
    consts: TheoryConstants,
    ensemble: PathEnsemble,
    t_index: int,
    z_grid,
    n_se: float = 5.0,
) -> DensityBoundReport:
    """Compare the histogram density of ``min_{j < i} Y(t_j)`` with its bound.

    Runs the plain scheme up to ``t_{i-1}`` with ``i = t_index``. Bins follow
    the Freedman-Diaconis rule; a point is flagged when the empirical density
    exceeds the bound by more than ``n_se`` binomial standard errors.
    """
    law = ensemble.law
    if law is None or not law.assumption1_satisfied:
        raise ValueError("initial law must have a density bounded by B x^beta (Dirac is rejected)")
    n = ensemble.mesh.n
    if not isinstance(t_index, (int, np.integer)) or not 1 <= t_index <= n:
        raise ValueError(f"t_index must be in [1, {n}]")
    t_i = float(ensemble.mesh.times[t_index])
    if t_index == 1:
        mins = ensemble.initial_positions
    else:
        sub = ensemble.truncate(t_index - 1)
        _, state = simulate_plain(ModelParams(params.alpha, sub.mesh.horizon), sub)
        mins = state.running_min
    N = mins.size
    edges = np.histogram_bin_edges(mins, bins="fd")
    counts, edges = np.histogram(mins, bins=edges)
    widths = np.diff(edges)
    frac = counts / N
    dens = frac / widths
    se = np.sqrt(frac * (1 - frac) / N) / widths

    z = np.asarray(z_grid, dtype=float)
    k = np.searchsorted(edges, z, side="right") - 1
    inside = (k >= 0) & (k < counts.size)
    k = np.clip(k, 0, counts.size - 1)
    emp = np.where(inside, dens[k], 0.0)
    err = np.where(inside, se[k], 0.0)
    bnd = density_bound(z, t_i, params.alpha, consts)
    viol = emp - bnd > n_se * err
    if np.any(viol):
        logger.warning("density bound exceeded at %d of %d points", int(viol.sum()), z.size)
    return DensityBoundReport(z, emp, err, bnd, viol, t_i)
