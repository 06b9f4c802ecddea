"""Noise modeling and two-step bias-corrected reconstruction.

The noise model maps a state to noisy measurement coordinates.  Gaussian
noise is drawn per raw sensor reading (physical sensors are noisy
individually) and then mapped to orthonormal coordinates; the magnitude-
dependent bias enters as a linear scaling ``(1 + alpha) u`` or through an
empirical lookup table of mean offsets.

Bias correction runs in two steps: a plain reconstruction from the raw data
first, then a second solve whose constraint is shifted by the expected
discrepancy between clean and noisy measurements of that first estimate.
For the linear model the corrector simply rescales the constraint by
``(1 - alpha)``, so a relative bias of ``alpha`` leaves a residual amplitude
error of order ``alpha**2`` instead of ``alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .obs import Measurement, ObservationSpace, observe
from .solver import Box, Reconstruction, pbdw_solve, pbdw_solve_boxed
from .space import GridFunction, Subspace

__all__ = [
    "NoiseModel",
    "BiasCorrectedReconstruction",
    "apply_noise",
    "noise_expectation",
    "mc_expectation",
    "discrepancy_xi",
    "bpbdw_reconstruct",
]

LINEAR_BIAS_GAUSSIAN = "linear_bias_gaussian"
EMPIRICAL_TABLE = "empirical_table"


@dataclass(frozen=True)
class NoiseModel:
    """Randomized observation model with a state-dependent bias.

    ``linear_bias_gaussian`` reads ``(1 + alpha) u`` plus Gaussian(0, sigma)
    per raw sensor coordinate and has an analytic expectation.

    ``empirical_table`` adds a mean offset looked up by reading magnitude:
    ``table`` is a list of ``(bin_lo, bin_hi, offset)`` rows whose bins must
    tile the expected reading range without gaps; expectations fall back to
    Monte Carlo with ``mc_samples`` draws.
    """

    kind: str = LINEAR_BIAS_GAUSSIAN
    alpha: float = 0.0
    sigma: float = 0.0
    mc_samples: int = 1000
    table: tuple[tuple[float, float, float], ...] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in (LINEAR_BIAS_GAUSSIAN, EMPIRICAL_TABLE):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if self.kind == EMPIRICAL_TABLE:
            if not self.table:
                raise ValueError("empirical_table model needs a table")
            table = tuple(tuple(map(float, row)) for row in self.table)
            object.__setattr__(self, "table", table)
            for lo, hi, _ in table:
                if not lo < hi:
                    raise ValueError(f"table bin [{lo}, {hi}] is empty")
            for (_, hi, _), (lo, _, _) in zip(table, table[1:]):
                if lo != hi:
                    raise ValueError("table bins must be contiguous (no gaps, no overlap)")

    def _table_offset(self, magnitude: float) -> float:
        for lo, hi, offset in self.table:
            if lo <= magnitude <= hi:
                return offset
        raise ValueError(
            f"reading magnitude {magnitude:g} falls outside the table range "
            f"[{self.table[0][0]:g}, {self.table[-1][1]:g}]"
        )

    def biased_readings(self, clean: np.ndarray) -> np.ndarray:
        """Mean (noise-free) readings under the bias part of the model."""
        if self.kind == LINEAR_BIAS_GAUSSIAN:
            return (1.0 + self.alpha) * clean
        offsets = np.array([self._table_offset(abs(z)) for z in clean])
        return clean + offsets

    @property
    def has_analytic_expectation(self) -> bool:
        return self.kind == LINEAR_BIAS_GAUSSIAN


def apply_noise(
    u: GridFunction, space: ObservationSpace, model: NoiseModel, seed: int
) -> Measurement:
    """One noisy observation of a state, deterministic under ``seed``."""
    rng = np.random.default_rng(seed)
    clean = space.apply_functionals(u)
    readings = model.biased_readings(clean)
    if model.sigma > 0:
        readings = readings + rng.normal(0.0, model.sigma, space.m)
    return Measurement(space.coords_from_raw(readings), space)


def mc_expectation(
    u: GridFunction, space: ObservationSpace, model: NoiseModel, seed: int
) -> Measurement:
    """Monte Carlo estimate of the expected noisy observation.

    Per-sample seeds are spawned from ``seed`` so the mean does not depend on
    evaluation order.
    """
    children = np.random.SeedSequence(seed).spawn(model.mc_samples)
    biased = model.biased_readings(space.apply_functionals(u))
    readings = np.tile(biased, (model.mc_samples, 1))
    if model.sigma > 0:
        for k, child in enumerate(children):
            rng = np.random.default_rng(child)
            readings[k] += rng.normal(0.0, model.sigma, space.m)
    coords = np.linalg.solve(space.raw_to_onb_matrix, readings.T).T
    return Measurement(coords.mean(axis=0), space)


def noise_expectation(
    u: GridFunction, space: ObservationSpace, model: NoiseModel, seed: int = 0
) -> Measurement:
    """Expected noisy observation; analytic where the model allows."""
    if model.has_analytic_expectation:
        return (1.0 + model.alpha) * observe(u, space)
    return mc_expectation(u, space, model, seed)


def discrepancy_xi(
    u: GridFunction, space: ObservationSpace, model: NoiseModel, seed: int = 0
) -> Measurement:
    """Expected gap between clean and noisy measurements of a state."""
    return observe(u, space) - noise_expectation(u, space, model, seed)


@dataclass(frozen=True, eq=False)
class BiasCorrectedReconstruction(Reconstruction):
    """Final corrected solve plus the first-pass diagnostics."""

    initial: Reconstruction | None = None
    eta: Measurement | None = None


def bpbdw_reconstruct(
    omega_star: Measurement,
    background: Subspace,
    space: ObservationSpace,
    model: NoiseModel,
    seed: int = 0,
    box: Box | None = None,
) -> BiasCorrectedReconstruction:
    """Two-step bias-corrected reconstruction.

    Step 1 reconstructs from the raw data; step 2 re-solves with the
    constraint shifted by the expected clean-vs-noisy discrepancy of the
    first estimate.  Passing ``box`` clamps the background coefficients in
    both solves.
    """
    solve = (
        (lambda target: pbdw_solve_boxed(target, background, space, box))
        if box is not None
        else (lambda target: pbdw_solve(target, background, space))
    )
    first = solve(omega_star)
    eta = observe(first.state, space) + discrepancy_xi(first.state, space, model, seed)
    corrected = solve(eta)
    return BiasCorrectedReconstruction(
        state=corrected.state,
        rom_coeffs=corrected.rom_coeffs,
        correction_coeffs=corrected.correction_coeffs,
        beta=corrected.beta,
        constraint_residual=corrected.constraint_residual,
        initial=first,
        eta=eta,
    )
