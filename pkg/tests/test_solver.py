import json

import numpy as np
import pytest

from assim import (
    Box,
    Grid,
    GridFunction,
    Measurement,
    SensorArray,
    SinusoidSpec,
    SnapshotSet,
    StabilityError,
    Subspace,
    build_observation_space,
    compute_box,
    inf_sup_beta,
    observe,
    orthonormalize,
    pbdw_solve,
    pbdw_solve_boxed,
    pod,
    sample_sinusoids,
)
from assim.rom import projection_residuals
from assim.solver import write_reconstruction


def kkt_oracle(grid, V, Q, d):
    """Dense equality-constrained quadratic program via explicit KKT assembly.

    Minimizes the weighted distance to the span of V subject to matching the
    observation coordinates d; V and Q are row bases, both orthonormal in the
    weighted inner product.
    """
    w = grid.weights
    B = np.diag(w)
    H = B - B @ V.T @ V @ B
    A = Q @ B
    n_pts, m = grid.num_points, Q.shape[0]
    kkt = np.block([[H, A.T], [A, np.zeros((m, m))]])
    rhs = np.concatenate([np.zeros(n_pts), d])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:n_pts]


def random_instance(rng, num_points, n, m):
    grid = Grid(0.0, 1.0, num_points)
    V = orthonormalize(
        [GridFunction(grid, rng.normal(size=num_points)) for _ in range(n)]
    )
    interior = rng.choice(np.arange(1, num_points - 1), size=m, replace=False)
    sensors = SensorArray(tuple(np.sort(grid.nodes[interior])), "pointwise")
    space = build_observation_space(sensors, grid)
    d = rng.normal(size=m)
    return grid, V, space, Measurement(d, space)


class TestPbdwSolve:
    def test_recovers_in_model_states(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 32, seed=1)
        basis = pod(snaps, 5)
        space = build_observation_space(SensorArray.equidistant(25, grid), grid)
        v = basis.subspace.combine(np.array([3.0, -1.0, 0.5, 2.0, -0.25]))
        rec = pbdw_solve(observe(v, space), basis.subspace, space)
        assert (rec.state - v).norm() <= 1e-9 * v.norm()

    def test_empty_background_is_observation_lift(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(6, grid), grid)
        d = rng.normal(size=6)
        target = Measurement(d, space)
        rec = pbdw_solve(target, Subspace(grid, ()), space)
        assert (rec.state - target.lift()).norm() < 1e-12
        assert rec.rom_coeffs.size == 0

    def test_against_kkt_oracle_single(self, rng):
        grid, V, space, target = random_instance(rng, num_points=6, n=2, m=3)
        expected = kkt_oracle(grid, V.matrix, space.onb.matrix, target.coeffs)
        rec = pbdw_solve(target, V, space)
        assert np.max(np.abs(rec.state.values - expected)) < 1e-10

    def test_constraint_exact(self, grid, rng):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 20, seed=2)
        basis = pod(snaps, 4)
        space = build_observation_space(SensorArray.equidistant(10, grid), grid)
        d = rng.normal(size=10) * 30.0
        rec = pbdw_solve(Measurement(d, space), basis.subspace, space)
        assert rec.constraint_residual <= 1e-8 * max(1.0, float(np.linalg.norm(d)))
        assert np.allclose(space.onb.coefficients(rec.state), d, atol=1e-8)

    def test_orthogonal_split(self, grid, rng):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 20, seed=3)
        basis = pod(snaps, 4)
        space = build_observation_space(SensorArray.equidistant(10, grid), grid)
        d = rng.normal(size=10) * 30.0
        rec = pbdw_solve(Measurement(d, space), basis.subspace, space)
        rom_part = basis.subspace.combine(rec.rom_coeffs)
        corr_part = space.onb.combine(rec.correction_coeffs)
        cross = rec.state.norm() ** 2 - rom_part.norm() ** 2 - corr_part.norm() ** 2
        assert abs(cross) <= 1e-8 * max(1.0, rec.state.norm() ** 2)

    def test_unobservable_background_rejected(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(6, grid), grid)
        u = GridFunction(grid, rng.normal(size=grid.num_points))
        perp = u - space.onb.combine(space.onb.coefficients(u))
        V = orthonormalize([perp])
        with pytest.raises(StabilityError):
            pbdw_solve(Measurement(rng.normal(size=6), space), V, space)

    def test_more_modes_than_sensors_rejected(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 16, seed=4)
        basis = pod(snaps, 8)
        space = build_observation_space(SensorArray.equidistant(5, grid), grid)
        with pytest.raises(ValueError):
            pbdw_solve(Measurement(np.zeros(5), space), basis.subspace, space)

    def test_error_bound(self, grid):
        # noiseless targets from validation snapshots satisfy the a priori bound
        spec = SinusoidSpec()
        training = sample_sinusoids(spec, grid, 64, seed=5)
        validation = sample_sinusoids(spec, grid, 25, seed=6)
        basis = pod(training, 10)
        space = build_observation_space(SensorArray.equidistant(25, grid), grid)
        for n in (2, 5, 8):
            sub = basis.subspace.truncate(n)
            eps = float(projection_residuals(validation, sub).max())
            beta = inf_sup_beta(sub, space)
            for truth in validation:
                rec = pbdw_solve(observe(truth, space), sub, space)
                assert (rec.state - truth).norm() <= eps / beta + 1e-8


class TestPbdwSolveBoxed:
    def test_inactive_box_matches_unboxed(self, grid, rng):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 20, seed=7)
        basis = pod(snaps, 4)
        space = build_observation_space(SensorArray.equidistant(12, grid), grid)
        truth = snaps.snapshots[0]
        target = observe(truth, space)
        plain = pbdw_solve(target, basis.subspace, space)
        wide = Box(plain.rom_coeffs - 100.0, plain.rom_coeffs + 100.0)
        boxed = pbdw_solve_boxed(target, basis.subspace, space, wide)
        assert (boxed.state - plain.state).norm() <= 1e-9 * max(1.0, plain.state.norm())

    def test_fully_clamped_box(self, grid, rng):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 20, seed=8)
        basis = pod(snaps, 3)
        space = build_observation_space(SensorArray.equidistant(10, grid), grid)
        target = Measurement(rng.normal(size=10), space)
        zero_box = Box(np.zeros(3), np.zeros(3))
        rec = pbdw_solve_boxed(target, basis.subspace, space, zero_box)
        assert np.array_equal(rec.rom_coeffs, np.zeros(3))
        assert (rec.state - target.lift()).norm() < 1e-10

    def test_scalar_clamp_against_interval_oracle(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 10, seed=9)
        basis = pod(snaps, 1)
        space = build_observation_space(SensorArray.equidistant(8, grid), grid)
        v = basis.subspace.basis[0]
        target = observe(2.0 * v, space)                # unconstrained coefficient = 2
        plain = pbdw_solve(target, basis.subspace, space)
        assert plain.rom_coeffs[0] == pytest.approx(2.0, abs=1e-9)
        rec = pbdw_solve_boxed(target, basis.subspace, space, Box([-1.0], [1.0]))
        # oracle: scalar quadratic on an interval clamps at the nearest endpoint
        assert rec.rom_coeffs[0] == pytest.approx(1.0, abs=1e-9)
        assert rec.constraint_residual <= 1e-8 * max(1.0, target.norm())

    def test_infeasible_box(self):
        with pytest.raises(ValueError):
            Box([1.0], [0.0])


class TestComputeBox:
    def test_singleton(self, grid, rng):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 12, seed=10)
        basis = pod(snaps, 3)
        single = SnapshotSet(snaps.snapshots[:1], snaps.parameters[:1], "full")
        box = compute_box(single, basis.subspace, margin=1.0)
        coeffs = basis.subspace.coefficients(snaps.snapshots[0])
        assert np.allclose(box.lo, coeffs, atol=1e-12)
        assert np.allclose(box.hi, coeffs, atol=1e-12)

    def test_symmetric_snapshots(self, grid, rng):
        fns = [GridFunction(grid, rng.normal(size=grid.num_points)) for _ in range(4)]
        arrays = [f.values for f in fns] + [-f.values for f in fns]
        snaps = SnapshotSet(
            tuple(GridFunction(grid, a) for a in arrays), tuple({} for _ in arrays), "full"
        )
        basis = pod(snaps, 3)
        box = compute_box(snaps, basis.subspace, margin=1.3)
        assert np.allclose(box.lo, -box.hi, atol=1e-12)

    def test_against_exhaustive_scan(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 5, seed=11)
        basis = pod(snaps, 2)
        box = compute_box(snaps, basis.subspace, margin=1.0)
        coeffs = np.stack([basis.subspace.coefficients(s) for s in snaps])
        assert np.allclose(box.lo, coeffs.min(axis=0), atol=1e-12)
        assert np.allclose(box.hi, coeffs.max(axis=0), atol=1e-12)

    def test_empty_set_rejected(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 3, seed=12)
        basis = pod(snaps, 2)
        with pytest.raises(ValueError):
            compute_box(SnapshotSet((), (), "full"), basis.subspace)


class TestExport:
    def test_reconstruction_files(self, tmp_path, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 10, seed=13)
        basis = pod(snaps, 3)
        space = build_observation_space(SensorArray.equidistant(8, grid), grid)
        rec = pbdw_solve(observe(snaps.snapshots[0], space), basis.subspace, space)
        csv_path = tmp_path / "state.csv"
        write_reconstruction(rec, csv_path)
        assert csv_path.read_text().splitlines()[0] == "x,value"
        diag = json.loads((tmp_path / "state.json").read_text())
        assert set(diag) == {"beta", "constraint_residual", "rom_coeffs", "correction_coeffs"}
        assert len(diag["rom_coeffs"]) == 3
        assert diag["beta"] == pytest.approx(rec.beta)
