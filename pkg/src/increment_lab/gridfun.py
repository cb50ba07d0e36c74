"""Lattice representation of distribution functions of finite signed measures on [0,1]^d.

A :class:`GridFunction` stores the mass of every cell of the regular lattice
``{0, 1/m, ..., 1}^d`` together with the distribution function evaluated at
the lattice points.  Arrays are kept in their natural ``d``-dimensional shape:
``cell_mass`` has shape ``(m,)*d`` and ``cdf`` has shape ``(m+1,)*d`` with
``cdf[0, ...] == 0`` along every axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LATTICE_TOL = 1e-9


class ShapeError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    d: int
    m: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ShapeError(f"dimension must be a positive integer, got {self.d!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ShapeError(f"cells per axis must be a positive integer, got {self.m!r}")

    @property
    def n_cells(self) -> int:
        return self.m ** self.d

    @property
    def cell_volume(self) -> float:
        return float(self.m) ** (-self.d)

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return (self.m,) * self.d

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        return (self.m + 1,) * self.d

    def axis(self) -> np.ndarray:
        """Lattice coordinates ``k/m`` along one axis."""
        return np.arange(self.m + 1) / self.m

    def lattice_points(self) -> np.ndarray:
        """All lattice points as an array of shape ``((m+1)^d, d)`` in C order."""
        grids = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def to_index(self, t: Sequence[float] | float) -> tuple[int, ...]:
        """Lattice multi-index of the point ``t``; raises if ``t`` is off-lattice."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.shape != (self.d,):
            raise ShapeError(f"expected a point of dimension {self.d}, got shape {t.shape}")
        scaled = t * self.m
        idx = np.rint(scaled)
        if np.any(np.abs(scaled - idx) > LATTICE_TOL) or np.any(idx < 0) or np.any(idx > self.m):
            raise DomainError(f"point {t.tolist()} is not on the lattice with m={self.m}")
        return tuple(int(i) for i in idx)


def cumulate(cell_mass: np.ndarray) -> np.ndarray:
    """Lattice distribution function of a cell-mass array.

    Prefix sums run axis by axis in increasing axis order so results are
    reproducible bit for bit.
    """
    d = cell_mass.ndim
    cdf = np.zeros(tuple(s + 1 for s in cell_mass.shape))
    inner = cell_mass.astype(float, copy=True)
    for ax in range(d):
        inner = np.cumsum(inner, axis=ax)
    cdf[(slice(1, None),) * d] = inner
    return cdf


def difference(cdf: np.ndarray) -> np.ndarray:
    """Inverse of :func:`cumulate`: inclusion-exclusion over every lattice cell."""
    out = np.asarray(cdf, dtype=float)
    for ax in range(out.ndim):
        out = np.diff(out, axis=ax)
    return out


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    cell_mass: np.ndarray
    cdf: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.cell_mass.shape != self.spec.cell_shape:
            raise ShapeError(
                f"cell_mass has shape {self.cell_mass.shape}, expected {self.spec.cell_shape}"
            )
        if self.cdf.shape != self.spec.lattice_shape:
            raise ShapeError(f"cdf has shape {self.cdf.shape}, expected {self.spec.lattice_shape}")
        self.cell_mass.setflags(write=False)
        self.cdf.setflags(write=False)

    @classmethod
    def from_cell_mass(cls, spec: GridSpec, cell_mass) -> "GridFunction":
        mass = np.array(cell_mass, dtype=float)
        if mass.size != spec.n_cells:
            raise ShapeError(f"expected {spec.n_cells} cell masses, got {mass.size}")
        mass = mass.reshape(spec.cell_shape)
        if not np.all(np.isfinite(mass)):
            raise DomainError("cell masses must be finite")
        return cls(spec, mass, cumulate(mass))

    @classmethod
    def from_cdf(cls, spec: GridSpec, cdf) -> "GridFunction":
        """Build from lattice values; the lower boundary is taken to be zero."""
        values = np.array(cdf, dtype=float)
        if values.size != (spec.m + 1) ** spec.d:
            raise ShapeError(f"expected {(spec.m + 1) ** spec.d} lattice values, got {values.size}")
        values = values.reshape(spec.lattice_shape)
        return cls.from_cell_mass(spec, difference(values))

    @classmethod
    def zero(cls, spec: GridSpec) -> "GridFunction":
        return cls.from_cell_mass(spec, np.zeros(spec.cell_shape))

    @property
    def density(self) -> np.ndarray:
        return self.cell_mass * self.spec.m ** self.spec.d

    @property
    def total_mass(self) -> float:
        return float(self.cdf[(-1,) * self.spec.d])

    def __call__(self, t) -> float:
        return float(self.cdf[self.spec.to_index(t)])

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_spec(self, other)
        return GridFunction.from_cell_mass(self.spec, self.cell_mass + other.cell_mass)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_spec(self, other)
        return GridFunction.from_cell_mass(self.spec, self.cell_mass - other.cell_mass)

    def __mul__(self, scale: float) -> "GridFunction":
        return GridFunction.from_cell_mass(self.spec, self.cell_mass * float(scale))

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps(
            {"d": self.spec.d, "m": self.spec.m, "cell_mass": self.cell_mass.ravel().tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        obj = json.loads(text)
        return cls.from_cell_mass(GridSpec(obj["d"], obj["m"]), obj["cell_mass"])


def _check_same_spec(f: GridFunction, g: GridFunction) -> None:
    if f.spec != g.spec:
        raise ShapeError(f"grid specs differ: {f.spec} vs {g.spec}")


def from_density(spec: GridSpec, g) -> GridFunction:
    """Distribution function of the piecewise-constant density ``g`` (one value per cell)."""
    g = np.asarray(g, dtype=float)
    if g.size != spec.n_cells:
        raise ShapeError(f"density needs {spec.n_cells} entries, got {g.size}")
    return GridFunction.from_cell_mass(spec, g.reshape(spec.cell_shape) * spec.cell_volume)


def to_density(f: GridFunction) -> np.ndarray:
    return difference(f.cdf) * f.spec.m ** f.spec.d


def eval_rect(f: GridFunction, s, t) -> float:
    """Mass of the closed rectangle ``[s, t]`` with lattice corners, by inclusion-exclusion."""
    lo = f.spec.to_index(s)
    hi = f.spec.to_index(t)
    if any(a > b for a, b in zip(lo, hi)):
        raise DomainError(f"corner {list(s)} is not below {list(t)} coordinatewise")
    d = f.spec.d
    total = 0.0
    for corner in range(2 ** d):
        idx = []
        sign = 1
        for k in range(d):
            if corner >> k & 1:
                idx.append(lo[k])
                sign = -sign
            else:
                idx.append(hi[k])
        total += sign * f.cdf[tuple(idx)]
    return float(total)


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.cdf)))


def sup_distance(f: GridFunction, g: GridFunction) -> float:
    _check_same_spec(f, g)
    return float(np.max(np.abs(f.cdf - g.cdf)))
