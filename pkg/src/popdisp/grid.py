"""Uniform 1D grids, nodal fields and the discrete operators built on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec", "ScalarField", "GridMismatch",
    "neumann_laplacian", "gradient", "integrate", "inf_norm_diff",
    "laplacian_array", "gradient_array", "trapezoid_weights",
]


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    x0: float = 0.0
    x1: float = 1.0
    n_cells: int = 512

    def __post_init__(self):
        if not self.x1 > self.x0:
            raise ValueError(f"need x1 > x0, got [{self.x0}, {self.x1}]")
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError(f"n_cells must be an integer >= 8, got {self.n_cells}")

    @property
    def h(self) -> float:
        return (self.x1 - self.x0) / self.n_cells

    @property
    def size(self) -> int:
        return self.n_cells + 1

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    def nodes(self) -> np.ndarray:
        return self.x0 + np.arange(self.n_cells + 1) * self.h

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.x0, self.x1, self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values on a grid; read-only after construction.

    Arithmetic with another field (same grid) or a scalar acts nodewise.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.size, float(c)))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes()

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise GridMismatch(f"{self.grid} vs {other.grid}")
            return other.values
        return other

    def _wrap(self, values):
        return ScalarField(self.grid, values)

    def __add__(self, o):
        return self._wrap(self.values + self._other(o))

    def __radd__(self, o):
        return self._wrap(self._other(o) + self.values)

    def __sub__(self, o):
        return self._wrap(self.values - self._other(o))

    def __rsub__(self, o):
        return self._wrap(self._other(o) - self.values)

    def __mul__(self, o):
        return self._wrap(self.values * self._other(o))

    def __rmul__(self, o):
        return self._wrap(self._other(o) * self.values)

    def __truediv__(self, o):
        return self._wrap(self.values / self._other(o))

    def __rtruediv__(self, o):
        return self._wrap(self._other(o) / self.values)

    def __pow__(self, o):
        return self._wrap(self.values ** self._other(o))

    def __neg__(self):
        return self._wrap(-self.values)


def laplacian_array(w: np.ndarray, h: float) -> np.ndarray:
    # mirror ghosts w[-1] = w[1], w[N+1] = w[N-1]
    out = np.empty_like(w, dtype=float)
    out[1:-1] = (w[:-2] - 2.0 * w[1:-1] + w[2:]) / h**2
    out[0] = 2.0 * (w[1] - w[0]) / h**2
    out[-1] = 2.0 * (w[-2] - w[-1]) / h**2
    return out


def gradient_array(f: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(f, dtype=float)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return g


def trapezoid_weights(grid: GridSpec) -> np.ndarray:
    w = np.full(grid.size, grid.h)
    w[0] = w[-1] = grid.h / 2.0
    return w


def neumann_laplacian(w: ScalarField) -> ScalarField:
    """Second-order Laplacian with homogeneous Neumann (mirror) closure."""
    return ScalarField(w.grid, laplacian_array(w.values, w.grid.h))


def gradient(f: ScalarField) -> ScalarField:
    """Central differences inside, second-order one-sided at both ends."""
    return ScalarField(f.grid, gradient_array(f.values, f.grid.h))


def integrate(f: ScalarField) -> float:
    """Composite trapezoid rule over the whole grid."""
    v = f.values
    return float(f.grid.h * (v[1:-1].sum() + 0.5 * (v[0] + v[-1])))


def inf_norm_diff(a: ScalarField, b: ScalarField) -> float:
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} vs {b.grid}")
    return float(np.abs(a.values - b.values).max())
