"""Sensors, Riesz representers and the observation space.

Each sensor is a linear functional l_i on the ambient space.  Its Riesz
representer w_i satisfies ``<w_i, u> = l_i(u)`` for every state u, and the
observation space is the span of the representers.  Noiseless data for a
state is its projection onto that span; a measurement is stored through its
coordinates in an orthonormalized basis of the observation space.

Two sensor kinds are provided: ``pointwise`` (reads the state at the nearest
grid node) and ``box_average`` (mean of the state over a window centered at
the sensor).  Box sensors are the default elsewhere since finite apertures
model real transducers and keep the representers independent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .space import (
    Grid,
    GridFunction,
    Subspace,
    _gram_schmidt,
)

__all__ = [
    "SensorArray",
    "ObservationSpace",
    "Measurement",
    "DependentSensorsError",
    "build_observation_space",
    "observe",
    "inf_sup_beta",
    "cross_gramian",
    "write_sensor_layout",
    "read_sensor_layout",
]

POINTWISE = "pointwise"
BOX_AVERAGE = "box_average"


class DependentSensorsError(ValueError):
    """Sensor functionals are linearly dependent on the given grid."""


@dataclass(frozen=True)
class SensorArray:
    """Sensor centers plus the functional kind.

    ``width`` is required for ``box_average`` and ignored for ``pointwise``.
    """

    centers: tuple[float, ...]
    kind: str = BOX_AVERAGE
    width: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        if len(self.centers) < 1:
            raise ValueError("need at least one sensor")
        if any(c2 <= c1 for c1, c2 in zip(self.centers, self.centers[1:])):
            raise ValueError("sensor centers must be strictly increasing")
        if self.kind not in (POINTWISE, BOX_AVERAGE):
            raise ValueError(f"unknown sensor kind {self.kind!r}")
        if self.kind == BOX_AVERAGE:
            if self.width is None or self.width <= 0:
                raise ValueError("box_average sensors need a positive width")

    @property
    def m(self) -> int:
        return len(self.centers)

    @classmethod
    def equidistant(cls, m: int, grid: Grid, kind: str = BOX_AVERAGE,
                    width: float | None = None) -> "SensorArray":
        """m sensors at cell centers of a uniform partition of the domain.

        For box sensors the default width equals the inter-sensor spacing,
        so the windows tile the domain.
        """
        spacing = (grid.b - grid.a) / m
        centers = grid.a + (np.arange(m) + 0.5) * spacing
        if kind == BOX_AVERAGE and width is None:
            width = spacing
        return cls(tuple(centers), kind, width)

    def validate_on(self, grid: Grid) -> None:
        if self.centers[0] <= grid.a or self.centers[-1] >= grid.b:
            raise ValueError("sensor centers must lie strictly inside the domain")

    def apply(self, u: GridFunction) -> np.ndarray:
        """Exact functional readings l_i(u) for every sensor."""
        grid = u.grid
        out = np.empty(self.m)
        for i, c in enumerate(self.centers):
            if self.kind == POINTWISE:
                out[i] = u.values[_nearest_node(grid, c)]
            else:
                mask = _window_mask(grid, c, self.width)
                out[i] = np.sum(grid.weights[mask] * u.values[mask]) / np.sum(grid.weights[mask])
        return out


def _nearest_node(grid: Grid, center: float) -> int:
    return int(np.argmin(np.abs(grid.nodes - center)))


def _window_mask(grid: Grid, center: float, width: float) -> np.ndarray:
    mask = np.abs(grid.nodes - center) <= width / 2 + 1e-12 * max(1.0, abs(width))
    if not mask.any():
        raise ValueError(f"sensor window at {center} contains no grid node")
    return mask


@dataclass(frozen=True, eq=False)
class ObservationSpace:
    """Riesz representers of the sensors and an orthonormal basis of their span."""

    grid: Grid
    sensors: SensorArray
    raw_representers: tuple[GridFunction, ...]
    onb: Subspace

    @property
    def m(self) -> int:
        return self.sensors.m

    @cached_property
    def functional_matrix(self) -> np.ndarray:
        """Row i applied to state values yields the exact reading l_i(u)."""
        raw = np.stack([r.values for r in self.raw_representers])
        return raw * self.grid.weights

    def apply_functionals(self, u: GridFunction) -> np.ndarray:
        """All raw sensor readings of a state at once."""
        if u.grid != self.grid:
            raise ValueError("state lives on a different grid")
        return self.functional_matrix @ u.values

    @cached_property
    def raw_to_onb_matrix(self) -> np.ndarray:
        """B[i, j] = <w_i, q_j>; maps onb coordinates to raw readings."""
        return self.functional_matrix @ self.onb.matrix.T

    def coords_from_raw(self, readings: np.ndarray) -> np.ndarray:
        """Coordinates of the unique element of the span whose readings match."""
        return np.linalg.solve(self.raw_to_onb_matrix, np.asarray(readings, dtype=float))

    def raw_from_coords(self, coords: np.ndarray) -> np.ndarray:
        return self.raw_to_onb_matrix @ np.asarray(coords, dtype=float)


@dataclass(frozen=True, eq=False)
class Measurement:
    """Coordinates of an observation-space element in the orthonormal basis."""

    coeffs: np.ndarray
    space: ObservationSpace

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape != (self.space.m,):
            raise ValueError(f"expected {self.space.m} coefficients, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("measurement coefficients must be finite")

    def lift(self) -> GridFunction:
        """The observation-space element with these coordinates."""
        return self.space.onb.combine(self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "Measurement") -> "Measurement":
        self._check_space(other)
        return Measurement(self.coeffs + other.coeffs, self.space)

    def __sub__(self, other: "Measurement") -> "Measurement":
        self._check_space(other)
        return Measurement(self.coeffs - other.coeffs, self.space)

    def __mul__(self, scalar: float) -> "Measurement":
        return Measurement(self.coeffs * float(scalar), self.space)

    __rmul__ = __mul__

    def _check_space(self, other: "Measurement") -> None:
        if other.space is not self.space:
            raise ValueError("measurements belong to different observation spaces")


def build_observation_space(sensors: SensorArray, grid: Grid) -> ObservationSpace:
    """Assemble Riesz representers and orthonormalize their span.

    Pointwise representers are discrete deltas at the nearest node divided by
    that node's quadrature weight; box representers are window indicators
    divided by the window measure.  Either way ``<w_i, u>`` reproduces the
    functional exactly on the grid.
    """
    sensors.validate_on(grid)
    reps = []
    for c in sensors.centers:
        r = np.zeros(grid.num_points)
        if sensors.kind == POINTWISE:
            k = _nearest_node(grid, c)
            r[k] = 1.0 / grid.weights[k]
        else:
            mask = _window_mask(grid, c, sensors.width)
            r[mask] = 1.0 / np.sum(grid.weights[mask])
        reps.append(r)
    rows, kept = _gram_schmidt(np.stack(reps), grid.weights, tol_drop=1e-10)
    if len(kept) != sensors.m:
        dropped = sorted(set(range(sensors.m)) - set(kept))
        names = ", ".join(f"#{i} (center {sensors.centers[i]:g})" for i in dropped)
        raise DependentSensorsError(
            f"sensors {names} are linearly dependent on this grid; "
            "spread the sensors or refine the grid"
        )
    onb = Subspace(grid, tuple(GridFunction(grid, r) for r in rows), _validate=False)
    return ObservationSpace(
        grid=grid,
        sensors=sensors,
        raw_representers=tuple(GridFunction(grid, r) for r in reps),
        onb=onb,
    )


def observe(u: GridFunction, space: ObservationSpace, noise=None, seed: int = 0) -> Measurement:
    """Measure a state: projection onto the observation space, plus noise.

    With ``noise=None`` the measurement is exact (coordinates of the
    projection).  Otherwise ``noise`` must be a noise model understood by
    :func:`assim.bias.apply_noise`, applied deterministically under ``seed``.
    """
    if noise is not None:
        from .bias import apply_noise

        return apply_noise(u, space, noise, seed)
    return Measurement(space.onb.coefficients(u), space)


def cross_gramian(space: ObservationSpace, subspace: Subspace) -> np.ndarray:
    """G[j, i] = <q_j, v_i> for the observation onb q and the given basis v."""
    return (space.onb.matrix * space.grid.weights) @ subspace.matrix.T


def inf_sup_beta(subspace: Subspace, space: ObservationSpace) -> float:
    """Stability constant: worst ratio ||P_W v|| / ||v|| over the subspace.

    Computed as the smallest singular value of the cross-Gramian between the
    two orthonormal bases; lies in [0, 1] up to roundoff.  The trivial
    subspace poses no stability constraint, so it reports 1.
    """
    n = subspace.dimension
    if n == 0:
        return 1.0
    if n > space.m:
        return 0.0
    G = cross_gramian(space, subspace)
    return float(np.linalg.svd(G, compute_uv=False)[-1])


def write_sensor_layout(sensors: SensorArray, path: str | Path) -> None:
    """Write the sensor layout as CSV ``center,kind,width``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["center", "kind", "width"])
        for c in sensors.centers:
            width = "" if sensors.width is None else repr(sensors.width)
            writer.writerow([repr(c), sensors.kind, width])


def read_sensor_layout(path: str | Path) -> SensorArray:
    """Read a sensor layout written by :func:`write_sensor_layout`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["center", "kind", "width"]:
            raise ValueError(f"unexpected header {header!r}")
        centers, kinds, widths = [], set(), set()
        for row in reader:
            centers.append(float(row[0]))
            kinds.add(row[1])
            widths.add(row[2])
    if len(kinds) != 1 or len(widths) != 1:
        raise ValueError("mixed sensor kinds or widths are not supported")
    kind = kinds.pop()
    width_str = widths.pop()
    width = None if width_str == "" else float(width_str)
    return SensorArray(tuple(centers), kind, width)
