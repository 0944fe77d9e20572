"""Experiment configuration files.

Configs are TOML: a few top-level keys plus ``[model]``, ``[law]`` and
``[mesh]`` tables (dotted keys such as ``model.alpha = 0.8`` work too).
See ``docs/config.md`` for the schema.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import InitialLaw, ModelParams, TimeMesh, build_refined_mesh, build_uniform_mesh, law_from_dict

__all__ = ["ConfigError", "ExperimentConfig", "MeshSpec", "load_config", "parse_config"]

_TOP_KEYS = {"seed", "N", "scheme", "outputs", "evaluation_time", "n_seeds", "levels", "grid_points"}
_SECTIONS = {"model": {"alpha", "horizon"}, "law": None, "mesh": {"kind", "n", "n_list", "beta"}}


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, when known, the line."""


@dataclass(frozen=True)
class MeshSpec:
    kind: str = "uniform"
    n: int | None = None
    n_list: tuple = ()
    beta: float | None = None

    def build(self, n: int, horizon: float) -> TimeMesh:
        if self.kind == "refined":
            return build_refined_mesh(n, horizon, self.beta)
        return build_uniform_mesh(n, horizon)


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    law: InitialLaw
    scheme: str = "bridge"
    mesh: MeshSpec = field(default_factory=MeshSpec)
    N: int = 100_000
    seed: int = 0
    outputs: Path = Path("out")
    evaluation_time: float | None = None
    n_seeds: int = 1
    levels: int = 1001
    grid_points: int = 512

    @property
    def eval_time(self) -> float:
        return self.params.horizon if self.evaluation_time is None else self.evaluation_time

    def with_overrides(self, seed=None, outputs=None) -> ExperimentConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=_int(seed, "seed", lo=0))
        if outputs is not None:
            cfg = replace(cfg, outputs=Path(outputs))
        return cfg

    def to_dict(self) -> dict:
        return {
            "model": {"alpha": self.params.alpha, "horizon": self.params.horizon},
            "law": self.law.to_dict(),
            "mesh": {
                "kind": self.mesh.kind,
                "n": self.mesh.n,
                "n_list": list(self.mesh.n_list),
                "beta": self.mesh.beta,
            },
            "scheme": self.scheme,
            "N": self.N,
            "seed": self.seed,
            "evaluation_time": self.eval_time,
            "n_seeds": self.n_seeds,
            "levels": self.levels,
            "grid_points": self.grid_points,
        }


def _locate(text: str, section: str | None, key: str) -> int | None:
    """1-based line defining ``key`` (in ``[section]`` or as ``section.key``)."""
    current = None
    dotted = re.compile(rf"^\s*{re.escape(section)}\.{re.escape(key)}\s*=") if section else None
    plain = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for lineno, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            continue
        if dotted is not None and current is None and dotted.match(line):
            return lineno
        if current == section and plain.match(line):
            return lineno
    return None


def _int(v, name, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{name}: must be >= {lo}, got {v}")
    return v


def _float(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name}: expected a finite number, got {v!r}")
    return float(v)


class _Reader:
    def __init__(self, data: dict, text: str, source: str):
        self.data, self.text, self.source = data, text, source

    def fail(self, section, key, msg):
        line = _locate(self.text, section, key) if key else None
        name = f"{section}.{key}" if section and key else (section or key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {name}: {msg}")

    def check(self, section, key, fn, *args):
        try:
            return fn(*args)
        except ConfigError as exc:
            self.fail(section, key, str(exc).split(": ", 1)[-1])
        except (TypeError, ValueError) as exc:
            self.fail(section, key, str(exc))


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    r = _Reader(data, text, source)

    for key, val in data.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                r.fail(None, key, "expected a table")
            allowed = _SECTIONS[key]
            for sub in val:
                if allowed is not None and sub not in allowed:
                    r.fail(key, sub, f"unknown field (allowed: {', '.join(sorted(allowed))})")
        elif key not in _TOP_KEYS:
            r.fail(None, key, "unknown field")

    model = data.get("model", {})
    for k in ("alpha", "horizon"):
        if k not in model:
            r.fail("model", k, "missing required field")
    alpha = r.check("model", "alpha", _float, model["alpha"], "alpha")
    horizon = r.check("model", "horizon", _float, model["horizon"], "horizon")
    if alpha < 0:
        r.fail("model", "alpha", f"must be >= 0, got {alpha}")
    if horizon <= 0:
        r.fail("model", "horizon", f"must be > 0, got {horizon}")
    params = ModelParams(alpha, horizon)

    law_d = data.get("law")
    if not law_d:
        r.fail("law", None, "missing [law] table")
    if "kind" not in law_d:
        r.fail("law", "kind", "missing required field")
    for k, v in law_d.items():
        if k != "kind":
            r.check("law", k, _float, v, k)
    try:
        law = law_from_dict(law_d)
    except (TypeError, ValueError) as exc:
        # point at the parameter the message mentions, else at the kind
        msg = str(exc)
        bad = next((k for k in law_d if k != "kind" and re.search(rf"\b{k}\b", msg)), "kind")
        r.fail("law", bad, msg)

    scheme = data.get("scheme", "bridge")
    if scheme not in ("plain", "bridge"):
        r.fail(None, "scheme", f"expected 'plain' or 'bridge', got {scheme!r}")

    mesh_d = data.get("mesh", {})
    kind = mesh_d.get("kind", "uniform")
    if kind not in ("uniform", "refined"):
        r.fail("mesh", "kind", f"expected 'uniform' or 'refined', got {kind!r}")
    beta = None
    if kind == "refined":
        if "beta" in mesh_d:
            beta = r.check("mesh", "beta", _float, mesh_d["beta"], "beta")
        else:
            beta = r.check("mesh", "kind", lambda: law.holder_beta)
        if not 0 < beta <= 1:
            r.fail("mesh", "beta", f"must be in (0, 1], got {beta}")
    n = None
    if "n" in mesh_d:
        n = r.check("mesh", "n", _int, mesh_d["n"], "n", 1)
    n_list = ()
    if "n_list" in mesh_d:
        raw = mesh_d["n_list"]
        if not isinstance(raw, list) or not raw:
            r.fail("mesh", "n_list", "expected a non-empty list of integers")
        n_list = tuple(r.check("mesh", "n_list", _int, v, "n_list", 1) for v in raw)
        for a, b in zip(n_list, n_list[1:]):
            if not (b > a and b % a == 0):
                r.fail("mesh", "n_list", f"entries must increase and each divide the next ({a} -> {b})")
    if n is None and not n_list:
        r.fail("mesh", "n", "one of mesh.n or mesh.n_list is required")
    mesh = MeshSpec(kind, n, n_list, beta)

    N = r.check(None, "N", _int, data.get("N", 100_000), "N", 1)
    seed = r.check(None, "seed", _int, data.get("seed", 0), "seed", 0)
    if seed >= 2**64:
        r.fail(None, "seed", "must fit in 64 bits")
    n_seeds = r.check(None, "n_seeds", _int, data.get("n_seeds", 1), "n_seeds", 1)
    levels = r.check(None, "levels", _int, data.get("levels", 1001), "levels", 2)
    grid_points = r.check(None, "grid_points", _int, data.get("grid_points", 512), "grid_points", 2)
    outputs = data.get("outputs", "out")
    if not isinstance(outputs, str) or not outputs:
        r.fail(None, "outputs", "expected a directory path string")
    ev = None
    if "evaluation_time" in data:
        ev = r.check(None, "evaluation_time", _float, data["evaluation_time"], "evaluation_time")
        if not 0 < ev <= horizon:
            r.fail(None, "evaluation_time", f"must lie in (0, {horizon}], got {ev}")

    return ExperimentConfig(
        params=params,
        law=law,
        scheme=scheme,
        mesh=mesh,
        N=N,
        seed=seed,
        outputs=Path(outputs),
        evaluation_time=ev,
        n_seeds=n_seeds,
        levels=levels,
        grid_points=grid_points,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))
