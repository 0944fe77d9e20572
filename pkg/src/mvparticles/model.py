"""Domain types: model parameters, initial laws, time meshes and theory constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special

__all__ = [
    "ModelParams",
    "Dirac",
    "GammaLaw",
    "ReciprocalExp",
    "InitialLaw",
    "TimeMesh",
    "TheoryConstants",
    "build_uniform_mesh",
    "build_refined_mesh",
    "law_from_dict",
]

MESH_RTOL = 1e-12


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _finite_positive(x: float, name: str) -> float:
    x = float(x)
    _require(math.isfinite(x) and x > 0, f"{name} must be a finite positive number, got {x!r}")
    return x


@dataclass(frozen=True)
class ModelParams:
    """Feedback strength ``alpha`` and terminal time ``horizon``."""

    alpha: float
    horizon: float

    def __post_init__(self):
        _require(math.isfinite(self.alpha) and self.alpha >= 0, f"alpha must be >= 0, got {self.alpha!r}")
        _finite_positive(self.horizon, "horizon")


# Initial laws -----------------------------------------------------------------


@dataclass(frozen=True)
class Dirac:
    """Point mass at ``y0``.

    Has no density, so it does not satisfy the Hölder density assumption; it
    exists to give closed-form oracles when ``alpha == 0``.
    """

    y0: float

    kind = "dirac"
    assumption1_satisfied = False

    def __post_init__(self):
        _finite_positive(self.y0, "y0")

    @property
    def holder_beta(self) -> float:
        return 1.0

    def density(self, x):
        raise ValueError("Dirac law has no density")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "y0": self.y0}


@dataclass(frozen=True)
class GammaLaw:
    """Gamma law in shape/scale form; ``holder_beta = shape - 1``."""

    shape: float
    scale: float

    kind = "gamma"

    def __post_init__(self):
        _finite_positive(self.shape, "shape")
        _finite_positive(self.scale, "scale")

    @property
    def assumption1_satisfied(self) -> bool:
        return 1.0 < self.shape <= 2.0

    @property
    def holder_beta(self) -> float:
        _require(
            self.assumption1_satisfied,
            f"Hoelder exponent only defined for shape in (1, 2], got shape={self.shape}",
        )
        return self.shape - 1.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        k, s = self.shape, self.scale
        xp = x[pos]
        out[pos] = np.exp((k - 1) * np.log(xp) - xp / s - special.gammaln(k) - k * math.log(s))
        return out

    def envelope_constant(self) -> float:
        """Smallest ``B`` with ``density(x) <= B * x**holder_beta`` on ``x > 0``."""
        # density(x) / x**(k-1) = exp(-x/s) / (Gamma(k) s^k), maximal as x -> 0
        return math.exp(-special.gammaln(self.shape) - self.shape * math.log(self.scale))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class ReciprocalExp:
    """Law of ``Y0`` with ``1 / Y0 ~ Exp(rate)``.

    The density vanishes faster than any power at 0, so every exponent in
    (0, 1] is admissible; 1 is reported.
    """

    rate: float

    kind = "reciprocal_exp"
    assumption1_satisfied = True

    def __post_init__(self):
        _finite_positive(self.rate, "rate")

    @property
    def holder_beta(self) -> float:
        return 1.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        xp = x[pos]
        out[pos] = self.rate / xp**2 * np.exp(-self.rate / xp)
        return out

    def envelope_constant(self) -> float:
        """Smallest ``B`` with ``density(x) <= B * x`` on ``x > 0``."""
        # max of rate x^-3 exp(-rate/x) is at x = rate/3
        x = self.rate / 3.0
        return self.rate / x**3 * math.exp(-3.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


InitialLaw = Union[Dirac, GammaLaw, ReciprocalExp]

_LAWS = {cls.kind: cls for cls in (Dirac, GammaLaw, ReciprocalExp)}


def law_from_dict(d: dict) -> InitialLaw:
    """Inverse of ``law.to_dict()``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _LAWS:
        raise ValueError(f"unknown law kind {kind!r}; expected one of {sorted(_LAWS)}")
    return _LAWS[kind](**{k: float(v) for k, v in d.items()})


# Meshes -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Strictly increasing grid ``0 = t_0 < ... < t_n = T``.

    ``kind`` is ``"uniform"``, ``"refined"`` (with ``beta``) or ``"custom"``.
    """

    times: np.ndarray
    kind: str = "custom"
    beta: float | None = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        _require(t.ndim == 1 and t.size >= 2, "mesh needs at least two points")
        _require(bool(np.all(np.isfinite(t))), "mesh times must be finite")
        _require(t[0] == 0.0, "mesh must start at 0")
        _require(bool(np.all(np.diff(t) > 0)), "mesh times must be strictly increasing")
        _require(self.kind in ("uniform", "refined", "custom"), f"unknown mesh kind {self.kind!r}")
        if self.kind == "uniform":
            dt = np.diff(t)
            _require(
                float(np.max(np.abs(dt - dt[0]))) <= MESH_RTOL * t[-1],
                "uniform mesh spacing is not constant",
            )
        if self.kind == "refined":
            _require(self.beta is not None and 0 < self.beta <= 1, "refined mesh needs beta in (0, 1]")

    @property
    def n(self) -> int:
        """Number of steps."""
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        if not isinstance(other, TimeMesh):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.beta == other.beta
            and np.array_equal(self.times, other.times)
        )

    def __repr__(self):
        return f"TimeMesh(n={self.n}, T={self.horizon:g}, kind={self.kind!r})"

    def truncate(self, n_steps: int) -> TimeMesh:
        """Mesh made of the first ``n_steps`` steps."""
        _require(1 <= n_steps <= self.n, f"n_steps must be in [1, {self.n}]")
        if n_steps == self.n:
            return self
        return TimeMesh(self.times[: n_steps + 1], kind="custom")

    def coarsen(self, factor: int) -> TimeMesh:
        """Every ``factor``-th point; uniform and refined meshes are rebuilt."""
        _require(isinstance(factor, (int, np.integer)) and factor >= 1, "factor must be a positive integer")
        _require(self.n % factor == 0, f"mesh size {self.n} is not divisible by {factor}")
        if factor == 1:
            return self
        m = self.n // factor
        if self.kind == "uniform":
            return build_uniform_mesh(m, self.horizon)
        if self.kind == "refined":
            return build_refined_mesh(m, self.horizon, self.beta)
        return TimeMesh(self.times[::factor], kind="custom")


def _check_mesh_args(n, T):
    _require(isinstance(n, (int, np.integer)) and not isinstance(n, bool) and n >= 1, f"n must be a positive integer, got {n!r}")
    _finite_positive(T, "T")


def build_uniform_mesh(n: int, T: float) -> TimeMesh:
    """``t_i = i T / n`` for ``i = 0..n``."""
    _check_mesh_args(n, T)
    t = np.arange(n + 1, dtype=float) * T / n
    t[-1] = T
    return TimeMesh(t, kind="uniform")


def build_refined_mesh(n: int, T: float, beta: float) -> TimeMesh:
    """Mesh ``t_i = (i h)^(2/(1+beta))`` with ``h = T^((1+beta)/2) / n``.

    Points cluster near 0, where the loss rate is least regular. The last
    point is pinned to ``T`` exactly.
    """
    _check_mesh_args(n, T)
    _require(math.isfinite(beta) and 0 < beta <= 1, f"beta must be in (0, 1], got {beta!r}")
    h = T ** ((1 + beta) / 2) / n
    t = (np.arange(n + 1, dtype=float) * h) ** (2 / (1 + beta))
    t[-1] = T
    return TimeMesh(t, kind="refined", beta=float(beta))


# Theory constants -------------------------------------------------------------


@dataclass(frozen=True)
class TheoryConstants:
    """Bounds ``f(x) <= B x^beta``, ``L'_t <= B_hat t^(-(1-beta)/2)``, ``L_t <= B_tilde t^((1+beta)/2)``.

    Build with :meth:`from_bounds` so that ``B_tilde = 2 B_hat / (1 + beta)``.
    """

    beta: float
    B: float
    B_hat: float
    B_tilde: float = field(default=float("nan"))

    def __post_init__(self):
        _require(math.isfinite(self.beta) and 0 < self.beta <= 1, f"beta must be in (0, 1], got {self.beta!r}")
        _finite_positive(self.B, "B")
        _finite_positive(self.B_hat, "B_hat")
        if math.isnan(self.B_tilde):
            object.__setattr__(self, "B_tilde", 2 * self.B_hat / (1 + self.beta))
        _finite_positive(self.B_tilde, "B_tilde")

    @classmethod
    def from_bounds(cls, beta: float, B: float, B_hat: float) -> TheoryConstants:
        return cls(beta=beta, B=B, B_hat=B_hat)
