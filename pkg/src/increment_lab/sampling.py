"""Reproducible samplers: uniform point clouds, Poisson counts, Wiener and Poisson sheets.

Every sampler takes a :class:`SeedStream`.  A stream is a root seed plus a
path of integers naming the consumer; the pair is fed to numpy's
``SeedSequence`` (as entropy and spawn key) and drives a Philox
counter-based generator, so two distinct paths give independent streams and
the same ``(root, path)`` always replays the same numbers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gridfun import DomainError, GridFunction, GridSpec, cumulate

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedStream:
    root_seed: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "root_seed", int(self.root_seed) & MASK64)
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if any(p < 0 for p in self.path):
            raise ValueError("seed path entries must be non-negative")

    def child(self, *keys: int) -> "SeedStream":
        return SeedStream(self.root_seed, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.root_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))

    def lineage(self) -> dict:
        return {"root_seed": self.root_seed, "path": list(self.path)}


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, SeedStream):
        return seed.generator()
    if isinstance(seed, np.random.Generator):
        return seed
    raise TypeError(f"expected SeedStream or Generator, got {type(seed).__name__}")


@dataclass(frozen=True, eq=False)
class PointCloud:
    d: int
    points: np.ndarray
    seed: SeedStream | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.d)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise DomainError("point coordinates must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def head(self, n: int) -> "PointCloud":
        """The first ``n`` points; prefixes of one cloud model a growing sample."""
        return PointCloud(self.d, self.points[:n], self.seed)


def sample_uniform(n: int, d: int, seed) -> PointCloud:
    if n < 0 or d < 1:
        raise DomainError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    pts = _rng(seed).random((int(n), int(d)))
    return PointCloud(int(d), pts, seed if isinstance(seed, SeedStream) else None)


def sample_poisson_count(mean: float, seed) -> int:
    """A Poisson(mean) variate.

    numpy's generator uses multiplication of uniforms for small means and
    Hormann's transformed rejection (PTRS) above 10, which covers both the
    tiny per-cell means of a sheet and the ``eta_n`` draws with mean ~1e6.
    """
    if not mean > 0:
        raise DomainError(f"Poisson mean must be positive, got {mean}")
    return int(_rng(seed).poisson(mean))


def wiener_sheet_batch(spec: GridSpec, count: int, seed) -> np.ndarray:
    """Lattice values of ``count`` independent Wiener sheets, shape ``(count, (m+1,)*d)``.

    Cell increments are i.i.d. N(0, m^-d); their cumulative sums reproduce
    the covariance prod_k min(s_k, t_k) exactly at the lattice points.
    """
    rng = _rng(seed)
    cells = rng.standard_normal((int(count),) + spec.cell_shape) * np.sqrt(spec.cell_volume)
    out = np.zeros((int(count),) + spec.lattice_shape)
    inner = cells
    for ax in range(1, spec.d + 1):
        inner = np.cumsum(inner, axis=ax)
    out[(slice(None),) + (slice(1, None),) * spec.d] = inner
    return out


def sample_wiener_sheet(spec: GridSpec, seed) -> GridFunction:
    cells = _rng(seed).standard_normal(spec.cell_shape) * np.sqrt(spec.cell_volume)
    return GridFunction(spec, cells, cumulate(cells))


def poisson_sheet_batch(intensity: float, spec: GridSpec, count: int, seed) -> np.ndarray:
    if not intensity > 0:
        raise DomainError(f"intensity must be positive, got {intensity}")
    cells = _rng(seed).poisson(intensity * spec.cell_volume, (int(count),) + spec.cell_shape)
    out = np.zeros((int(count),) + spec.lattice_shape)
    inner = cells.astype(float)
    for ax in range(1, spec.d + 1):
        inner = np.cumsum(inner, axis=ax)
    out[(slice(None),) + (slice(1, None),) * spec.d] = inner
    return out


def sample_poisson_sheet(intensity: float, spec: GridSpec, seed) -> GridFunction:
    """Counting distribution function of a homogeneous Poisson process of the given intensity."""
    if not intensity > 0:
        raise DomainError(f"intensity must be positive, got {intensity}")
    cells = _rng(seed).poisson(intensity * spec.cell_volume, spec.cell_shape).astype(float)
    return GridFunction(spec, cells, cumulate(cells))


# Binary columnar point-cloud file:
#   magic b"ILPC", u32 version, u32 d, u64 n, u64 root seed, u32 path length,
#   path as i64, then coordinate-major little-endian f64 columns.
_PC_MAGIC = b"ILPC"
_PC_VERSION = 1


def write_point_cloud(cloud: PointCloud, path) -> None:
    seed = cloud.seed or SeedStream(0)
    header = struct.pack("<4sIIQQI", _PC_MAGIC, _PC_VERSION, cloud.d, cloud.n, seed.root_seed,
                         len(seed.path))
    header += struct.pack(f"<{len(seed.path)}q", *seed.path)
    body = np.ascontiguousarray(cloud.points.T, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_point_cloud(path) -> PointCloud:
    raw = Path(path).read_bytes()
    fixed = struct.calcsize("<4sIIQQI")
    magic, version, d, n, root, plen = struct.unpack_from("<4sIIQQI", raw, 0)
    if magic != _PC_MAGIC:
        raise ValueError(f"{path}: not a point-cloud file (magic {magic!r})")
    if version != _PC_VERSION:
        raise ValueError(f"{path}: unsupported point-cloud version {version}")
    seed_path = struct.unpack_from(f"<{plen}q", raw, fixed)
    offset = fixed + 8 * plen
    cols = np.frombuffer(raw, dtype="<f8", count=d * n, offset=offset).reshape(d, n)
    return PointCloud(d, cols.T.astype(float), SeedStream(root, seed_path))
