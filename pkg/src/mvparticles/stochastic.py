"""Seeded sampling of initial positions and Brownian paths.

Randomness is keyed by ``(seed, stream, block)`` through
:class:`numpy.random.SeedSequence` and drawn with the counter-based Philox
generator. Particles are grouped in fixed blocks of :data:`BLOCK` indices
and each block owns a substream. Brownian normals are drawn one time step
at a time, a full block per step, so the value attached to particle ``k``
at step ``i`` depends only on ``(seed, k, i)`` and the mesh, never on ``N``
or on how many workers generate the blocks.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Dirac, GammaLaw, InitialLaw, ReciprocalExp, TimeMesh, law_from_dict

__all__ = [
    "PathEnsemble",
    "sample_initial",
    "sample_increments",
    "sample_paths",
    "BrownianStream",
    "make_ensemble",
    "coarsen",
    "substream",
    "save_ensemble",
    "load_ensemble",
]

BLOCK = 4096

STREAM_INITIAL = 0
STREAM_BROWNIAN = 1
STREAM_SURVIVOR = 2


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _check_count(N) -> int:
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    return int(N)


def substream(seed: int, stream: int, block: int) -> np.random.Generator:
    """Generator for one ``(seed, stream, block)`` key."""
    ss = np.random.SeedSequence(entropy=_check_seed(seed), spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(ss))


def _blocks(N: int):
    for b in range(math.ceil(N / BLOCK)):
        lo = b * BLOCK
        yield b, lo, min(N, lo + BLOCK)


def _run_blocks(fn, N: int, workers: int):
    blocks = list(_blocks(N))
    if workers <= 1 or len(blocks) == 1:
        for blk in blocks:
            fn(*blk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda blk: fn(*blk), blocks))


def _draw_initial(law: InitialLaw, gen: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(law, Dirac):
        return np.full(size, law.y0)
    if isinstance(law, GammaLaw):
        return gen.gamma(law.shape, law.scale, size=size)
    if isinstance(law, ReciprocalExp):
        # inverse transform of 1/Y0 ~ Exp(rate); 1 - U lies in (0, 1]
        e = -np.log1p(-gen.random(size)) / law.rate
        return 1.0 / e
    raise TypeError(f"unsupported initial law {law!r}")


def sample_initial(law: InitialLaw, N: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``N`` i.i.d. samples of ``Y0``; deterministic in ``seed``."""
    N = _check_count(N)
    seed = _check_seed(seed)
    out = np.empty(N)

    def fill(b, lo, hi):
        out[lo:hi] = _draw_initial(law, substream(seed, STREAM_INITIAL, b), hi - lo)

    _run_blocks(fill, N, workers)
    # 1/E overflows to inf only when E underflows; clamp keeps the sample finite
    np.minimum(out, np.finfo(float).max, out=out)
    if not np.all(out > 0):
        raise FloatingPointError("initial sample is not strictly positive")
    return out


class BrownianStream:
    """Brownian values ``W(t_1), ..., W(t_n)`` for ``N`` particles, one time slice at a time.

    Each particle block keeps its own generator and draws a full block of
    normals per step (surplus draws of a partial last block are discarded),
    so the slice values depend only on ``(seed, particle index, step)``.
    Memory is ``O(N)`` regardless of the mesh size.
    """

    def __init__(self, mesh: TimeMesh, N: int, seed: int, workers: int = 1):
        self.mesh = mesh
        self.N = _check_count(N)
        self.seed = _check_seed(seed)
        self.workers = workers
        self._blocks = list(_blocks(self.N))
        self._gens = [substream(self.seed, STREAM_BROWNIAN, b) for b, _, _ in self._blocks]
        self._sd = np.sqrt(mesh.steps)
        self._w = np.zeros(self.N)
        self._pool = ThreadPoolExecutor(workers) if workers > 1 and len(self._blocks) > 1 else None

    def __iter__(self):
        try:
            for i in range(self.mesh.n):
                sd = self._sd[i]

                def advance(blk, sd=sd):
                    b, lo, hi = blk
                    z = self._gens[b].standard_normal(BLOCK)
                    self._w[lo:hi] += z[: hi - lo] * sd

                if self._pool is None:
                    for blk in self._blocks:
                        advance(blk)
                else:
                    list(self._pool.map(advance, self._blocks))
                yield self._w
        finally:
            if self._pool is not None:
                self._pool.shutdown()


def sample_paths(mesh: TimeMesh, N: int, seed: int, workers: int = 1) -> np.ndarray:
    """Brownian paths on ``mesh`` as an ``N x (n+1)`` array, first column 0.

    The array is Fortran-ordered so that one time slice is contiguous.
    Column ``i`` equals slice ``i`` of :class:`BrownianStream` bit for bit.
    """
    W = np.zeros((_check_count(N), mesh.n + 1), order="F")
    for i, w in enumerate(BrownianStream(mesh, N, seed, workers), 1):
        W[:, i] = w
    return W


def sample_increments(mesh: TimeMesh, N: int, seed: int, workers: int = 1) -> np.ndarray:
    """Brownian increments ``W(t_i) - W(t_{i-1})`` as an ``N x n`` matrix."""
    return np.diff(sample_paths(mesh, N, seed, workers), axis=1)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Initial positions and Brownian paths for ``N`` particles on a mesh.

    ``paths[k, i]`` is ``W(t_i)`` for particle ``k``; it is the stored data, and
    ``increments`` is derived from it. Coarsening selects columns of
    ``paths``, so paths on nested meshes agree bit for bit at shared times.
    """

    mesh: TimeMesh
    paths: np.ndarray
    initial_positions: np.ndarray
    seed: int | None = None
    law: InitialLaw | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        W = np.asarray(self.paths, dtype=float)
        y0 = np.asarray(self.initial_positions, dtype=float)
        if W.ndim != 2 or W.shape[1] != self.mesh.n + 1:
            raise ValueError(f"paths must have shape (N, {self.mesh.n + 1}), got {W.shape}")
        if y0.shape != (W.shape[0],):
            raise ValueError("initial_positions must have one entry per path")
        if W.shape[0] < 1:
            raise ValueError("ensemble needs at least one particle")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(y0))):
            raise ValueError("ensemble contains non-finite values")
        if not np.all(W[:, 0] == 0):
            raise ValueError("Brownian paths must start at 0")
        if not np.all(y0 > 0):
            raise ValueError("initial positions must be strictly positive")
        object.__setattr__(self, "paths", np.asfortranarray(W))
        object.__setattr__(self, "initial_positions", y0)

    @classmethod
    def from_increments(cls, mesh: TimeMesh, increments, initial_positions, **kw) -> PathEnsemble:
        dW = np.atleast_2d(np.asarray(increments, dtype=float))
        W = np.zeros((dW.shape[0], dW.shape[1] + 1), order="F")
        np.cumsum(dW, axis=1, out=W[:, 1:])
        return cls(mesh, W, initial_positions, **kw)

    @property
    def N(self) -> int:
        return self.paths.shape[0]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.paths, axis=1)

    def truncate(self, n_steps: int) -> PathEnsemble:
        """The ensemble restricted to the first ``n_steps`` steps."""
        mesh = self.mesh.truncate(n_steps)
        return PathEnsemble(mesh, self.paths[:, : n_steps + 1], self.initial_positions, self.seed, self.law)


def make_ensemble(law: InitialLaw, mesh: TimeMesh, N: int, seed: int, workers: int = 1) -> PathEnsemble:
    """Sample initial positions and Brownian paths from one seed."""
    return PathEnsemble(
        mesh,
        sample_paths(mesh, N, seed, workers),
        sample_initial(law, N, seed, workers),
        seed=seed,
        law=law,
    )


def coarsen(fine: PathEnsemble, factor: int) -> PathEnsemble:
    """Restrict ``fine`` to every ``factor``-th mesh point.

    Coarse increments telescope to sums of consecutive fine increments; the
    coarse paths equal the fine paths at shared times exactly.
    """
    mesh = fine.mesh.coarsen(factor)
    if factor == 1:
        return fine
    return PathEnsemble(mesh, fine.paths[:, ::factor], fine.initial_positions, fine.seed, fine.law)


# Binary dump ------------------------------------------------------------------

_MAGIC = b"MVPE0001"


def save_ensemble(ensemble: PathEnsemble, path) -> None:
    """Write an ensemble for debugging.

    Layout: magic, little-endian u64 header length, UTF-8 JSON header
    (seed, N, n, law, mesh kind), then little-endian float64 body: mesh times,
    initial positions, and the ``N x (n+1)`` path matrix in row-major order.
    """
    header = json.dumps(
        {
            "seed": ensemble.seed,
            "N": ensemble.N,
            "n": ensemble.mesh.n,
            "law": None if ensemble.law is None else ensemble.law.to_dict(),
            "mesh_kind": ensemble.mesh.kind,
            "mesh_beta": ensemble.mesh.beta,
        },
        sort_keys=True,
    ).encode()
    le = np.dtype("<f8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(ensemble.mesh.times.astype(le).tobytes())
        fh.write(ensemble.initial_positions.astype(le).tobytes())
        fh.write(np.ascontiguousarray(ensemble.paths, dtype=le).tobytes())


def load_ensemble(path) -> PathEnsemble:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path}: not an ensemble dump")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + hlen])
    N, n = header["N"], header["n"]
    body = np.frombuffer(data, dtype="<f8", offset=16 + hlen)
    if body.size != (n + 1) + N + N * (n + 1):
        raise ValueError(f"{path}: truncated body")
    times = body[: n + 1]
    y0 = body[n + 1 : n + 1 + N]
    W = body[n + 1 + N :].reshape(N, n + 1)
    mesh = TimeMesh(times, kind=header["mesh_kind"], beta=header["mesh_beta"])
    law = None if header["law"] is None else law_from_dict(header["law"])
    return PathEnsemble(mesh, W.astype(float), y0.astype(float), header["seed"], law)
