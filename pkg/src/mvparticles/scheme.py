"""Particle schemes for the loss process with hitting-time feedback.

Both schemes march over the mesh once. At step ``i`` the loss level is
estimated from information strictly before ``t_i`` and then every particle
is moved to ``Y0 + W(t_i) - alpha * L(t_i)``.

* :func:`simulate_plain` counts a particle as lost once one of its mesh
  positions is ``<= 0``.
* :func:`simulate_bridge` multiplies a survival weight by the probability
  that a Brownian bridge between consecutive positions stays above 0.

Per-particle work is split in fixed chunks of :data:`CHUNK` indices and the
loss is reduced over the whole particle array in a fixed tree order, so
results do not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ModelParams, TimeMesh
from .stochastic import BrownianStream, PathEnsemble, sample_initial

__all__ = [
    "LossCurve",
    "ParticleState",
    "simulate_plain",
    "simulate_bridge",
    "simulate",
    "simulate_nested",
    "loss_at",
    "tree_sum",
    "bridge_survival",
    "write_curve_csv",
    "read_curve_csv",
]

CHUNK = 1 << 15
SCHEMES = ("plain", "bridge")


@dataclass(frozen=True, eq=False)
class LossCurve:
    """Loss estimates at the mesh points.

    Between mesh points the curve is extended piecewise constant from the
    left: ``L(s) = L(t_{i-1})`` for ``t_{i-1} < s < t_i``.
    """

    mesh: TimeMesh
    values: np.ndarray
    scheme_tag: str = "plain"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.shape != self.mesh.times.shape:
            raise ValueError(f"expected {self.mesh.times.size} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("loss values must be finite")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("loss values must lie in [0, 1]")
        if np.any(np.diff(v) < 0):
            raise ValueError("loss values must be nondecreasing")

    @property
    def times(self) -> np.ndarray:
        return self.mesh.times

    @property
    def horizon(self) -> float:
        return self.mesh.horizon

    def __call__(self, t):
        return loss_at(self, t)


@dataclass(eq=False)
class ParticleState:
    """Particle positions and survival weights after the last step.

    ``survival`` is 0/1 for the plain scheme and the running bridge product
    for the bridge scheme. ``running_min`` is taken over all mesh points.
    """

    positions: np.ndarray
    survival: np.ndarray
    running_min: np.ndarray


def tree_sum(x) -> float:
    """Pairwise sum in a fixed binary-tree order.

    The array is zero-padded to a power of two and halved repeatedly, so the
    rounding pattern depends on the length only.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    size = 1 << (x.size - 1).bit_length()
    buf = np.zeros(size)
    buf[: x.size] = x
    while size > 1:
        size //= 2
        buf = buf[:size] + buf[size : 2 * size]
    return float(buf[0])


def bridge_survival(a, b, dt):
    """Probability that a Brownian bridge from ``a`` to ``b`` over ``dt`` stays positive."""
    a = np.maximum(a, 0.0)
    b = np.maximum(b, 0.0)
    return -np.expm1(-2.0 * a * b / dt)


def _chunks(N):
    return [slice(lo, min(N, lo + CHUNK)) for lo in range(0, N, CHUNK)]


class _Runner:
    """Apply a per-chunk function over fixed chunks, optionally threaded."""

    def __init__(self, N, workers):
        self.slices = _chunks(N)
        self.pool = ThreadPoolExecutor(workers) if workers > 1 and len(self.slices) > 1 else None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self.pool is not None:
            self.pool.shutdown()

    def map(self, fn):
        if self.pool is None:
            for s in self.slices:
                fn(s)
        else:
            for f in [self.pool.submit(fn, s) for s in self.slices]:
                f.result()


def _check_inputs(params: ModelParams, ensemble: PathEnsemble, workers: int):
    if not math.isclose(ensemble.mesh.horizon, params.horizon, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"mesh horizon {ensemble.mesh.horizon} does not match model horizon {params.horizon}"
        )
    if not isinstance(workers, int) or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")


class _PlainStepper:
    """Discretely monitored scheme, advanced one slice of ``W`` at a time."""

    tag = "plain"

    def __init__(self, alpha, y0, run):
        self.alpha, self.y0, self.run = alpha, y0, run
        self.pos = y0.copy()
        self.hit = self.pos <= 0
        self.run_min = self.pos.copy()

    def step(self, w, dt) -> float:
        level = np.count_nonzero(self.hit) / self.y0.size
        pos, hit, run_min, y0, alpha = self.pos, self.hit, self.run_min, self.y0, self.alpha

        def move(s):
            p = pos[s]
            np.add(y0[s], w[s], out=p)
            p -= alpha * level
            hit[s] |= p <= 0
            np.minimum(run_min[s], p, out=run_min[s])

        self.run.map(move)
        return level

    def state(self) -> ParticleState:
        return ParticleState(self.pos, (~self.hit).astype(float), self.run_min)


class _BridgeStepper:
    """Brownian-bridge weighted scheme, advanced one slice of ``W`` at a time."""

    tag = "bridge"

    def __init__(self, alpha, y0, run):
        self.alpha, self.y0, self.run = alpha, y0, run
        self.pos = y0.copy()
        self.surv = np.ones(y0.size)
        self.lost = np.empty(y0.size)
        self.run_min = self.pos.copy()
        self.prev = 0.0

    def step(self, w, dt) -> float:
        pos, surv, lost, run_min, y0, alpha = self.pos, self.surv, self.lost, self.run_min, self.y0, self.alpha
        prev = self.prev

        def weigh(s):
            left = y0[s] + w[s] - alpha * prev
            surv[s] *= bridge_survival(pos[s], left, dt)
            np.subtract(1.0, surv[s], out=lost[s])

        self.run.map(weigh)
        level = tree_sum(lost) / y0.size

        def move(s):
            p = pos[s]
            np.add(y0[s], w[s], out=p)
            p -= alpha * level
            np.minimum(run_min[s], p, out=run_min[s])

        self.run.map(move)
        self.prev = level
        return level

    def state(self) -> ParticleState:
        return ParticleState(self.pos, self.surv, self.run_min)


_STEPPERS = {"plain": _PlainStepper, "bridge": _BridgeStepper}


def _check_scheme(scheme):
    if scheme not in _STEPPERS:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def _march(params, mesh, y0, columns, scheme, workers):
    y0 = np.asarray(y0, dtype=float)
    loss = np.zeros(mesh.n + 1)
    dts = mesh.steps
    with _Runner(y0.size, workers) as run:
        stepper = _STEPPERS[scheme](params.alpha, y0, run)
        for i, w in enumerate(columns, 1):
            loss[i] = stepper.step(w, dts[i - 1])
    return LossCurve(mesh, loss, scheme), stepper.state()


def simulate_plain(params: ModelParams, ensemble: PathEnsemble, workers: int = 1):
    """Discretely monitored particle scheme.

    Returns ``(LossCurve, ParticleState)``. A particle whose position at
    some earlier mesh point was ``<= 0`` stays counted as lost, while its
    position keeps being updated.
    """
    _check_inputs(params, ensemble, workers)
    cols = (ensemble.paths[:, i] for i in range(1, ensemble.mesh.n + 1))
    return _march(params, ensemble.mesh, ensemble.initial_positions, cols, "plain", workers)


def simulate_bridge(params: ModelParams, ensemble: PathEnsemble, workers: int = 1):
    """Particle scheme with Brownian-bridge survival weights.

    Over step ``i`` the endpoints are the previous position and the left
    limit ``Y0 + W(t_i) - alpha * L(t_{i-1})``; the step size is the actual
    mesh spacing. The loss is the mean of ``1 - survival``.
    """
    _check_inputs(params, ensemble, workers)
    cols = (ensemble.paths[:, i] for i in range(1, ensemble.mesh.n + 1))
    return _march(params, ensemble.mesh, ensemble.initial_positions, cols, "bridge", workers)


def simulate(params: ModelParams, ensemble: PathEnsemble, scheme: str = "plain", workers: int = 1):
    """Dispatch on ``scheme`` (``"plain"`` or ``"bridge"``)."""
    _check_scheme(scheme)
    if scheme == "plain":
        return simulate_plain(params, ensemble, workers)
    return simulate_bridge(params, ensemble, workers)


def simulate_nested(params: ModelParams, law, fine_mesh: TimeMesh, factors, N: int, seed: int,
                    scheme: str = "plain", workers: int = 1):
    """Run the scheme on ``fine_mesh.coarsen(f)`` for every ``f`` in ``factors`` at once.

    All runs share one seeded Brownian stream and one set of initial
    positions, and the paths are never stored: memory is ``O(N)`` per
    mesh. The result for factor ``f`` equals
    ``simulate(params, coarsen(make_ensemble(law, fine_mesh, N, seed), f))``
    bit for bit. Returns a list of ``(LossCurve, ParticleState)``.
    """
    _check_scheme(scheme)
    if not isinstance(workers, int) or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")
    if not math.isclose(fine_mesh.horizon, params.horizon, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"mesh horizon {fine_mesh.horizon} does not match model horizon {params.horizon}")
    meshes = [fine_mesh.coarsen(f) for f in factors]
    y0 = sample_initial(law, N, seed, workers)
    losses = [np.zeros(m.n + 1) for m in meshes]
    with _Runner(N, workers) as run:
        steppers = [_STEPPERS[scheme](params.alpha, y0, run) for _ in meshes]
        for j, w in enumerate(BrownianStream(fine_mesh, N, seed, workers), 1):
            for f, m, st, loss in zip(factors, meshes, steppers, losses):
                if j % f == 0:
                    i = j // f
                    loss[i] = st.step(w, m.steps[i - 1])
    return [(LossCurve(m, loss, scheme), st.state()) for m, st, loss in zip(meshes, steppers, losses)]


def loss_at(curve: LossCurve, t):
    """Evaluate the left piecewise-constant extension of ``curve`` at ``t``."""
    t_arr = np.asarray(t, dtype=float)
    T = curve.horizon
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0) or np.any(t_arr > T):
        raise ValueError(f"t must lie in [0, {T}]")
    idx = np.searchsorted(curve.times, t_arr, side="right") - 1
    out = curve.values[idx]
    return float(out) if out.ndim == 0 else out


# CSV --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_curve_csv(curve: LossCurve, path) -> None:
    """Write ``t,L`` rows with 17 significant digits."""
    buf = io.StringIO()
    buf.write("t,L\n")
    for t, v in zip(curve.times, curve.values):
        buf.write(f"{_fmt(t)},{_fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_curve_csv(path, scheme_tag: str = "plain") -> LossCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "L"]:
        raise ValueError(f"{path}: expected header 't,L'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return LossCurve(TimeMesh(data[:, 0]), data[:, 1], scheme_tag)
