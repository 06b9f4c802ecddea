"""Discrete ambient Hilbert space on a uniform 1-D grid.

States live in l2(Omega) for an interval Omega = [a, b], discretized on a
uniform grid with trapezoid quadrature weights.  The weighted inner product

    <u, v> = sum_k w_k u_k v_k

is exact for constants and keeps the Gram algebra symmetric positive, which
is all the downstream reconstruction machinery relies on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "Subspace",
    "GridMismatchError",
    "NotOrthonormalError",
    "inner_product",
    "norm",
    "project_onto",
    "orthonormalize",
    "write_grid_function",
    "read_grid_function",
]

ORTHONORMALITY_TOL = 1e-10

# 17 significant digits round-trip IEEE doubles exactly.
FLOAT_FMT = "%.17g"


class GridMismatchError(ValueError):
    """Two grid functions come from incompatible discretizations."""


class NotOrthonormalError(ValueError):
    """A basis that must be orthonormal is not."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [a, b] with trapezoid quadrature weights."""

    a: float
    b: float
    num_points: int

    def __post_init__(self) -> None:
        if not self.b > self.a:
            raise ValueError(f"grid requires b > a, got [{self.a}, {self.b}]")
        if self.num_points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.num_points}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.num_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.num_points)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.num_points, self.h)
        w[0] = w[-1] = self.h / 2
        return w

    def zero(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.num_points))

    def function(self, f) -> "GridFunction":
        """Sample a callable on the grid nodes."""
        return GridFunction(self, np.asarray(f(self.nodes), dtype=float))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values on a grid; an element of the ambient space."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.num_points,):
            raise ValueError(
                f"values have shape {values.shape}, expected ({self.grid.num_points},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def norm(self) -> float:
        return norm(self)


def _check_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.grid != v.grid:
        raise GridMismatchError(
            f"incompatible discretizations: {u.grid} vs {v.grid}"
        )


def inner_product(u: GridFunction, v: GridFunction) -> float:
    """Weighted l2(Omega) inner product of two grid functions."""
    _check_same_grid(u, v)
    return float(np.sum(u.grid.weights * u.values * v.values))


def norm(u: GridFunction) -> float:
    return float(np.sqrt(np.sum(u.grid.weights * u.values**2)))


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis of grid functions (orthonormality is checked).

    Construct via :func:`orthonormalize` unless the basis is orthonormal by
    construction already.
    """

    grid: Grid
    basis: tuple[GridFunction, ...]
    _validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", tuple(self.basis))
        for fn in self.basis:
            if fn.grid != self.grid:
                raise GridMismatchError("basis functions live on a different grid")
        if self._validate and self.dimension > 0:
            G = self.matrix * self.grid.weights
            gram = G @ self.matrix.T
            if np.max(np.abs(gram - np.eye(self.dimension))) > ORTHONORMALITY_TOL:
                raise NotOrthonormalError(
                    "basis is not orthonormal; run orthonormalize() first"
                )

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Basis values stacked row-wise, shape (dimension, num_points)."""
        if not self.basis:
            return np.zeros((0, self.grid.num_points))
        return np.stack([fn.values for fn in self.basis])

    def coefficients(self, u: GridFunction) -> np.ndarray:
        """Coordinates of the projection of ``u`` onto the subspace."""
        if u.grid != self.grid:
            raise GridMismatchError("function lives on a different grid")
        return (self.matrix * self.grid.weights) @ u.values

    def combine(self, coeffs: np.ndarray) -> GridFunction:
        """Linear combination of the basis with the given coordinates."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} coefficients, got {coeffs.shape}")
        if self.dimension == 0:
            return self.grid.zero()
        return GridFunction(self.grid, self.matrix.T @ coeffs)

    def truncate(self, n: int) -> "Subspace":
        if not 0 <= n <= self.dimension:
            raise ValueError(f"cannot truncate dimension {self.dimension} to {n}")
        return Subspace(self.grid, self.basis[:n], _validate=False)


def project_onto(u: GridFunction, subspace: Subspace) -> GridFunction:
    """Orthogonal projection of ``u`` onto an orthonormal subspace."""
    if u.grid != subspace.grid:
        raise GridMismatchError("function and subspace live on different grids")
    if subspace.dimension == 0:
        return u.grid.zero()
    return subspace.combine(subspace.coefficients(u))


def _gram_schmidt(vectors: np.ndarray, weights: np.ndarray, tol_drop: float):
    """Modified Gram-Schmidt with one re-orthogonalization pass per vector.

    Returns the orthonormal rows and the indices of the inputs that were kept;
    a candidate is dropped when its residual norm falls below ``tol_drop``
    times its original norm.
    """
    kept_rows: list[np.ndarray] = []
    kept_idx: list[int] = []
    for i, row in enumerate(vectors):
        v = row.astype(float).copy()
        n0 = np.sqrt(np.sum(weights * v**2))
        if n0 == 0.0:
            continue
        for _ in range(2):
            for q in kept_rows:
                v -= np.sum(weights * q * v) * q
        nv = np.sqrt(np.sum(weights * v**2))
        if nv < tol_drop * n0:
            continue
        kept_rows.append(v / nv)
        kept_idx.append(i)
    return kept_rows, kept_idx


def orthonormalize(
    fns: list[GridFunction] | tuple[GridFunction, ...],
    tol_drop: float = 1e-10,
    grid: Grid | None = None,
) -> Subspace:
    """Orthonormalize a family of grid functions, dropping dependent ones.

    An empty family yields the trivial subspace (``grid`` must then be given).
    """
    if tol_drop <= 0:
        raise ValueError("tol_drop must be positive")
    fns = list(fns)
    if not fns:
        if grid is None:
            raise ValueError("empty family: pass grid= to build the trivial subspace")
        return Subspace(grid, ())
    grid = fns[0].grid
    for fn in fns[1:]:
        _check_same_grid(fns[0], fn)
    rows, _ = _gram_schmidt(np.stack([fn.values for fn in fns]), grid.weights, tol_drop)
    return Subspace(grid, tuple(GridFunction(grid, r) for r in rows), _validate=False)


def write_grid_function(u: GridFunction, path: str | Path) -> None:
    """Write a grid function as two-column CSV (header ``x,value``)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "value"])
        for xk, vk in zip(u.grid.nodes, u.values):
            writer.writerow([FLOAT_FMT % xk, FLOAT_FMT % vk])


def read_grid_function(path: str | Path) -> GridFunction:
    """Read a grid function written by :func:`write_grid_function`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "value"]:
            raise ValueError(f"unexpected header {header!r}, expected ['x', 'value']")
        xs, vals = [], []
        for row in reader:
            xs.append(float(row[0]))
            vals.append(float(row[1]))
    xs = np.asarray(xs)
    grid = Grid(float(xs[0]), float(xs[-1]), len(xs))
    if not np.allclose(xs, grid.nodes, atol=1e-12 * max(1.0, abs(xs[-1]))):
        raise ValueError("nodes in file are not a uniform grid")
    return GridFunction(grid, np.asarray(vals))
