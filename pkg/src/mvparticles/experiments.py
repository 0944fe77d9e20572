"""Experiment drivers behind the command-line subcommands.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its files
into ``config.outputs`` and returns the in-memory results.
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import numpy as np

from . import analysis
from .config import ExperimentConfig
from .model import ModelParams, TheoryConstants
from .scheme import LossCurve, loss_at, simulate_nested, write_curve_csv
from .stochastic import BLOCK, STREAM_SURVIVOR, substream
from .theory import check_extension_condition, extension_lhs, solve_T_star, t_star_lhs

logger = logging.getLogger(__name__)

__all__ = [
    "NoSurvivorsError",
    "paired_curves",
    "paired_errors",
    "blowup_metrics",
    "select_survivors",
    "run_simulate",
    "run_converge",
    "run_blowup",
    "run_density",
    "run_theory",
]


class NoSurvivorsError(ValueError):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def _write_table(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, np.integer)) else _fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _doubling(n_list):
    if len(n_list) < 4:
        raise ValueError(f"mesh.n_list needs at least 4 entries, got {len(n_list)}")
    for a, b in zip(n_list, n_list[1:]):
        if b != 2 * a:
            raise ValueError(f"mesh.n_list must double at each entry ({a} -> {b})")


def paired_curves(cfg: ExperimentConfig, seed: int, workers: int = 1) -> list[LossCurve]:
    """Loss curves on every mesh of ``cfg.mesh.n_list``, all from one ensemble.

    Brownian paths are drawn on the finest mesh and every coarser mesh reads
    them at its own points, so the curves share paths and initial positions.
    The paths are streamed rather than stored.
    """
    n_list = cfg.mesh.n_list
    finest = n_list[-1]
    mesh = cfg.mesh.build(finest, cfg.params.horizon)
    runs = simulate_nested(cfg.params, cfg.law, mesh, [finest // n for n in n_list], cfg.N, seed, cfg.scheme, workers)
    return [curve for curve, _ in runs]


def _seeds(cfg: ExperimentConfig):
    return [cfg.seed + s for s in range(cfg.n_seeds)]


def paired_errors(cfg: ExperimentConfig, workers: int = 1):
    """Seed-averaged ``|L^{2n} - L^n|`` at the evaluation time.

    Returns ``(mesh_sizes, errors, per_seed)`` where ``mesh_sizes`` are the
    coarse sizes of each pair and ``per_seed`` holds the signed differences.
    """
    _doubling(cfg.mesh.n_list)
    t = cfg.eval_time
    diffs = []
    for seed in _seeds(cfg):
        curves = paired_curves(cfg, seed, workers)
        vals = np.array([loss_at(c, t) for c in curves])
        diffs.append(np.diff(vals))
    diffs = np.array(diffs)
    return np.array(cfg.mesh.n_list[:-1]), np.mean(np.abs(diffs), axis=0), diffs


def _fit_positive(ns, errs, label):
    keep = errs > 0
    if not np.all(keep):
        logger.warning("%s: dropping %d zero paired errors before regression", label, int((~keep).sum()))
    if keep.sum() < 3:
        return None
    return analysis.fit_order(ns[keep], errs[keep])


def blowup_metrics(cfg: ExperimentConfig, workers: int = 1):
    """Seed-averaged paired d1/d2/d3 and per-run jump reports.

    Returns ``(mesh_sizes, metrics, jumps, first_curves)`` with ``metrics``
    a dict of arrays and ``jumps`` a list of ``(seed, n, JumpReport,
    median_increment)``.
    """
    _doubling(cfg.mesh.n_list)
    sums = {k: np.zeros(len(cfg.mesh.n_list) - 1) for k in ("d1", "d2", "d3")}
    jumps = []
    first = None
    for seed in _seeds(cfg):
        curves = paired_curves(cfg, seed, workers)
        if first is None:
            first = curves
        for c in curves:
            jumps.append((seed, c.mesh.n, analysis.detect_jump(c), float(np.median(np.diff(c.values)))))
        for i, (a, b) in enumerate(zip(curves, curves[1:])):
            sums["d1"][i] += analysis.metric_d1(a, b)
            sums["d2"][i] += analysis.metric_d2(a, b)
            sums["d3"][i] += analysis.metric_d3(a, b, cfg.levels)
    metrics = {k: v / cfg.n_seeds for k, v in sums.items()}
    return np.array(cfg.mesh.n_list[:-1]), metrics, jumps, first


def _single_mesh(cfg: ExperimentConfig):
    if cfg.mesh.n is None:
        raise ValueError("mesh.n is required for this command")
    return cfg.mesh.build(cfg.mesh.n, cfg.params.horizon)


def run_simulate(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Write ``loss.csv``, ``loss_rate.csv``, ``summary.json`` and ``timing.json``."""
    out = _prepare_out(cfg)
    start = time.perf_counter()
    mesh = _single_mesh(cfg)
    [(curve, _)] = simulate_nested(cfg.params, cfg.law, mesh, [1], cfg.N, cfg.seed, cfg.scheme, workers)
    write_curve_csv(curve, out / "loss.csv")
    if mesh.n >= 2:
        rate = analysis.loss_derivative(curve)
        _write_table(out / "loss_rate.csv", ["t", "dL"], rate)
    jump = analysis.detect_jump(curve)
    summary = {
        "config": cfg.to_dict(),
        "evaluation_time": cfg.eval_time,
        "loss_at_evaluation_time": loss_at(curve, cfg.eval_time),
        "loss_at_horizon": float(curve.values[-1]),
        "jump": {"index": jump.index, "time": jump.time, "size": jump.size},
        "median_increment": float(np.median(np.diff(curve.values))),
    }
    _write_json(summary, out / "summary.json")
    _write_json({"wall_time_s": time.perf_counter() - start}, out / "timing.json")
    return {"curve": curve, "summary": summary}


def run_converge(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Write ``errors.csv`` (``n,error``) and ``order.json``."""
    out = _prepare_out(cfg)
    start = time.perf_counter()
    ns, errs, _ = paired_errors(cfg, workers)
    _write_table(out / "errors.csv", ["n", "error"], zip(ns, errs))
    report = _fit_positive(ns, errs, "paired error")
    _write_json(
        {"order": None if report is None else report.to_dict(), "config": cfg.to_dict()},
        out / "order.json",
    )
    _write_json({"wall_time_s": time.perf_counter() - start}, out / "timing.json")
    return {"mesh_sizes": ns, "errors": errs, "report": report}


def run_blowup(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Write per-n curves, ``metrics.csv``, ``jumps.csv`` and ``order.json``."""
    out = _prepare_out(cfg)
    start = time.perf_counter()
    ns, metrics, jumps, curves = blowup_metrics(cfg, workers)
    for c in curves:
        write_curve_csv(c, out / f"loss_n{c.mesh.n}.csv")
    _write_table(out / "metrics.csv", ["n", "d1", "d2", "d3"], zip(ns, metrics["d1"], metrics["d2"], metrics["d3"]))
    _write_table(
        out / "jumps.csv",
        ["seed", "n", "index", "time", "size", "median_increment"],
        [(s, n, j.index, j.time, j.size, med) for s, n, j, med in jumps],
    )
    reports = {k: _fit_positive(ns, v, k) for k, v in metrics.items()}
    _write_json(
        {
            "orders": {k: (None if r is None else r.to_dict()) for k, r in reports.items()},
            "config": cfg.to_dict(),
        },
        out / "order.json",
    )
    _write_json({"wall_time_s": time.perf_counter() - start}, out / "timing.json")
    return {"mesh_sizes": ns, "metrics": metrics, "jumps": jumps, "reports": reports, "curves": curves}


def select_survivors(state, scheme: str, seed: int) -> np.ndarray:
    """Boolean mask of particles counted as alive.

    Plain: survival indicator above 1/2. Bridge: one Bernoulli draw per
    particle with success probability equal to its survival weight, from a
    dedicated substream keyed like the initial positions.
    """
    surv = state.survival
    if scheme == "plain":
        return surv > 0.5
    u = np.empty(surv.size)
    for b, lo in enumerate(range(0, surv.size, BLOCK)):
        hi = min(surv.size, lo + BLOCK)
        u[lo:hi] = substream(seed, STREAM_SURVIVOR, b).random(hi - lo)
    return u < surv


def run_density(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Write ``density.csv`` (``x,density``) for positive surviving positions."""
    out = _prepare_out(cfg)
    mesh = _single_mesh(cfg)
    k = int(np.searchsorted(mesh.times, cfg.eval_time, side="right") - 1)
    sub = mesh.truncate(max(k, 1))
    params = ModelParams(cfg.params.alpha, sub.horizon)
    [(_, state)] = simulate_nested(params, cfg.law, sub, [1], cfg.N, cfg.seed, cfg.scheme, workers)
    alive = select_survivors(state, cfg.scheme, cfg.seed) & (state.positions > 0)
    x = state.positions[alive]
    if x.size < 2 or np.ptp(x) == 0:
        raise NoSurvivorsError(f"no survivors with positive position at t={sub.horizon} ({x.size} left)")
    h = analysis.silverman_bandwidth(x)
    grid = np.linspace(max(0.0, x.min() - 4 * h), x.max() + 4 * h, cfg.grid_points)
    est = analysis.kde_density(x, grid, h)
    _write_table(out / "density.csv", ["x", "density"], zip(est.grid, est.values))
    summary = {
        "config": cfg.to_dict(),
        "time": sub.horizon,
        "survivors": int(x.size),
        "bandwidth": est.bandwidth,
        "mode": float(est.grid[np.argmax(est.values)]),
    }
    _write_json(summary, out / "summary.json")
    return {"estimate": est, "summary": summary, "samples": x}


def run_theory(alpha: float, beta: float, B: float, B_hat: float) -> dict:
    """``T*``, its residual and the extension condition as a JSON-ready dict."""
    consts = TheoryConstants.from_bounds(beta, B, B_hat)
    T = solve_T_star(alpha, consts)
    return {
        "alpha": alpha,
        "beta": beta,
        "B": B,
        "B_hat": B_hat,
        "B_tilde": consts.B_tilde,
        "T_star": T,
        "residual": abs(t_star_lhs(T, alpha, consts) - 1.0),
        "extension_lhs": extension_lhs(alpha, consts, T),
        "extension_condition": check_extension_condition(alpha, consts, T),
    }
