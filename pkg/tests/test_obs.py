import numpy as np
import pytest

from assim import (
    Grid,
    GridFunction,
    NoiseModel,
    SensorArray,
    SinusoidSpec,
    Subspace,
    build_observation_space,
    inf_sup_beta,
    inner_product,
    observe,
    orthonormalize,
    pod,
    sample_sinusoids,
)
from assim.obs import DependentSensorsError, read_sensor_layout, write_sensor_layout


def random_fn(grid, rng, scale=1.0):
    return GridFunction(grid, rng.normal(0.0, scale, grid.num_points))


class TestSensorArray:
    def test_centers_must_increase(self):
        with pytest.raises(ValueError):
            SensorArray((0.5, 0.5), "pointwise")
        with pytest.raises(ValueError):
            SensorArray((0.5, 0.2), "pointwise")

    def test_box_needs_width(self):
        with pytest.raises(ValueError):
            SensorArray((0.5,), "box_average", width=None)

    def test_centers_inside_domain(self, grid):
        sensors = SensorArray((0.0, 1.0), "pointwise")
        with pytest.raises(ValueError):
            build_observation_space(sensors, grid)

    def test_equidistant_tiles_domain(self, grid):
        sensors = SensorArray.equidistant(25, grid)
        assert sensors.m == 25
        assert sensors.width == pytest.approx((grid.b - grid.a) / 25)


class TestBuildObservationSpace:
    def test_pointwise_delta_reproduction(self, grid, rng):
        node = grid.nodes[100]
        space = build_observation_space(SensorArray((float(node),), "pointwise"), grid)
        for _ in range(5):
            u = random_fn(grid, rng)
            assert inner_product(space.raw_representers[0], u) == pytest.approx(
                u.values[100], abs=1e-12
            )

    def test_full_domain_box_measures_mean_of_constant(self, grid):
        width = grid.b - grid.a
        space = build_observation_space(
            SensorArray((0.5 * (grid.a + grid.b),), "box_average", width=1.01 * width), grid
        )
        c = GridFunction(grid, np.full(grid.num_points, 3.25))
        assert space.sensors.apply(c)[0] == pytest.approx(3.25, abs=1e-12)
        assert inner_product(space.raw_representers[0], c) == pytest.approx(3.25, abs=1e-12)

    def test_box_25_sensors_gram_identity(self, grid):
        # oracle: explicit Gram assembly of the orthonormalized basis
        space = build_observation_space(SensorArray.equidistant(25, grid), grid)
        assert space.onb.dimension == 25
        Q = space.onb.matrix
        gram = (Q * grid.weights) @ Q.T
        assert np.max(np.abs(gram - np.eye(25))) <= 1e-10

    def test_dependent_pointwise_sensors_named(self):
        grid = Grid(0.0, 1.0, 11)
        # two centers that snap to the same grid node
        sensors = SensorArray((0.501, 0.52), "pointwise")
        with pytest.raises(DependentSensorsError) as err:
            build_observation_space(sensors, grid)
        assert "#1" in str(err.value)

    def test_dependent_box_sensors_named(self):
        grid = Grid(0.0, 1.0, 11)
        # windows so wide they cover the same node set
        sensors = SensorArray((0.48, 0.52), "box_average", width=0.9)
        with pytest.raises(DependentSensorsError):
            build_observation_space(sensors, grid)

    def test_riesz_consistency(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(10, grid), grid)
        for _ in range(5):
            u = random_fn(grid, rng)
            raw = space.sensors.apply(u)
            riesz = [inner_product(w, u) for w in space.raw_representers]
            assert np.allclose(raw, riesz, atol=1e-10)


class TestObserve:
    def test_reproduces_elements_of_the_span(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(8, grid), grid)
        coeffs = rng.normal(size=8)
        u = space.onb.combine(coeffs)
        measurement = observe(u, space)
        assert np.allclose(measurement.coeffs, coeffs, atol=1e-10)
        assert (measurement.lift() - u).norm() < 1e-10

    def test_orthogonal_state_measures_zero(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(8, grid), grid)
        u = random_fn(grid, rng)
        u_perp = u - space.onb.combine(space.onb.coefficients(u))
        assert np.max(np.abs(observe(u_perp, space).coeffs)) < 1e-10

    def test_linear_bias_analytic(self, grid):
        width = grid.b - grid.a
        space = build_observation_space(
            SensorArray((0.5 * (grid.a + grid.b),), "box_average", width=1.01 * width), grid
        )
        one = GridFunction(grid, np.ones(grid.num_points))
        model = NoiseModel(alpha=0.2, sigma=0.0)
        got = observe(one, space, noise=model, seed=0)
        # closed form: the expected reading of a constant is (1 + alpha) * c
        raw = space.raw_from_coords(got.coeffs)
        assert raw[0] == pytest.approx(1.2, abs=1e-12)


class TestInfSupBeta:
    def test_contained_subspace(self, grid):
        space = build_observation_space(SensorArray.equidistant(12, grid), grid)
        contained = Subspace(grid, space.onb.basis[:4], _validate=False)
        assert inf_sup_beta(contained, space) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_subspace(self, grid, rng):
        space = build_observation_space(SensorArray.equidistant(6, grid), grid)
        fns = [random_fn(grid, rng) for _ in range(2)]
        perp = [u - space.onb.combine(space.onb.coefficients(u)) for u in fns]
        V = orthonormalize(perp)
        assert inf_sup_beta(V, space) < 1e-10

    @pytest.mark.parametrize("theta", [np.pi / 6, np.pi / 4, np.pi / 3])
    def test_planar_angle(self, grid, rng, theta):
        space = build_observation_space(SensorArray.equidistant(10, grid), grid)
        w = space.onb.basis[0]
        raw = random_fn(grid, rng)
        residual = raw - space.onb.combine(space.onb.coefficients(raw))
        w_perp = residual * (1.0 / residual.norm())
        v = np.cos(theta) * w + np.sin(theta) * w_perp
        V = Subspace(grid, (v,), _validate=False)
        assert inf_sup_beta(V, space) == pytest.approx(abs(np.cos(theta)), abs=1e-10)

    def test_monotone_in_n(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 64, seed=1)
        basis = pod(snaps, 10)
        space = build_observation_space(SensorArray.equidistant(25, grid), grid)
        betas = [inf_sup_beta(basis.subspace.truncate(n), space) for n in range(1, 11)]
        assert all(b2 <= b1 + 1e-10 for b1, b2 in zip(betas, betas[1:]))

    def test_monotone_in_m_for_nested_sensors(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 64, seed=2)
        V5 = pod(snaps, 5).subspace
        base = np.linspace(0.4, 5.9, 8)
        extra = np.linspace(0.7, 5.4, 7)
        small = SensorArray(tuple(sorted(base)), "pointwise")
        large = SensorArray(tuple(sorted(np.concatenate([base, extra]))), "pointwise")
        beta_small = inf_sup_beta(V5, build_observation_space(small, grid))
        beta_large = inf_sup_beta(V5, build_observation_space(large, grid))
        assert beta_large >= beta_small - 1e-10

    def test_range(self, grid):
        snaps = sample_sinusoids(SinusoidSpec(), grid, 30, seed=3)
        basis = pod(snaps, 6)
        space = build_observation_space(SensorArray.equidistant(12, grid), grid)
        beta = inf_sup_beta(basis.subspace, space)
        assert 0.0 <= beta <= 1.0 + 1e-10


class TestLayoutSerialization:
    def test_round_trip(self, tmp_path, grid):
        sensors = SensorArray.equidistant(7, grid)
        path = tmp_path / "sensors.csv"
        write_sensor_layout(sensors, path)
        back = read_sensor_layout(path)
        assert back == sensors

    def test_pointwise_round_trip(self, tmp_path):
        sensors = SensorArray((0.25, 0.5, 0.75), "pointwise")
        path = tmp_path / "sensors.csv"
        write_sensor_layout(sensors, path)
        assert read_sensor_layout(path) == sensors
