"""SDF oracles, batch sampling and evaluation"""

import numpy as np
import pytest

from src.core.errors import ConfigurationError, InputError
from src.core.tape import Tape
from src.pipeline.tasks.oracles import (
    Box,
    SampledPointOracle,
    ShapeType,
    Sphere,
    Torus,
    Union,
    analytic_sdf,
    make_shape,
)
from src.pipeline.tasks.sdf_task import (
    SdfTask,
    grid_centers,
    sample_sdf_batch,
    sdf_eval_metrics,
    split_counts,
    to_unit_cube,
)


@pytest.mark.unit
class TestOracles:
    def test_sphere_values(self):
        sphere = Sphere(0.5)
        assert analytic_sdf(sphere, np.zeros(3)) == pytest.approx(-0.5)
        assert analytic_sdf(sphere, np.array([1.0, 0.0, 0.0])) == pytest.approx(0.5)

    def test_torus_tube_centre(self):
        torus = Torus(0.5, 0.2)
        assert analytic_sdf(torus, np.array([0.5, 0.0, 0.0])) == pytest.approx(-0.2)
        assert analytic_sdf(torus, np.zeros(3)) == pytest.approx(0.3)

    def test_box_values(self):
        box = Box((0.3, 0.2, 0.1))
        assert analytic_sdf(box, np.zeros(3)) == pytest.approx(-0.1)
        assert analytic_sdf(box, np.array([0.6, 0.0, 0.0])) == pytest.approx(0.3)
        assert analytic_sdf(box, np.array([0.7, 0.5, 0.1])) == pytest.approx(0.5)

    def test_union_is_min(self, rng):
        a, b = Sphere(0.3, (-0.2, 0, 0)), Box((0.2, 0.2, 0.2), (0.3, 0, 0))
        p = rng.uniform(-1, 1, size=(100, 3))
        np.testing.assert_allclose(Union(a, b).distance(p), np.minimum(a.distance(p), b.distance(p)))

    @pytest.mark.parametrize(
        "oracle",
        [Sphere(0.5), Box((0.3, 0.2, 0.4)), Torus(0.5, 0.2), Union(Sphere(0.3, (-0.2, 0, 0)), Sphere(0.3, (0.2, 0, 0)))],
        ids=["sphere", "box", "torus", "union"],
    )
    def test_surface_samples_lie_on_surface(self, oracle, rng):
        points = oracle.sample_surface(rng, 500)
        assert points.shape == (500, 3)
        np.testing.assert_allclose(oracle.distance(points), 0.0, atol=1e-9)

    def test_sampled_point_oracle(self, rng):
        points = rng.uniform(-1, 1, size=(400, 3))
        sdf = Sphere(0.5).distance(points)
        sdf[:10] = 0.0
        oracle = SampledPointOracle(points, sdf, surface_tolerance=1e-6)
        np.testing.assert_array_equal(oracle.distance(points[20:30]), sdf[20:30])
        samples = oracle.sample_surface(rng, 50)
        assert set(map(tuple, samples)) <= set(map(tuple, points[:10]))

    def test_union_samples_follow_surface_weights(self, rng):
        big, small = Sphere(0.3, (-0.5, 0.0, 0.0)), Sphere(0.1, (0.5, 0.0, 0.0))
        assert big.surface_weight == pytest.approx(4.0 * np.pi * 0.09)
        samples = Union(big, small).sample_surface(rng, 20_000)
        share = float(np.mean(samples[:, 0] < 0.0))
        assert share == pytest.approx(0.9, abs=0.01)

    def test_sampled_oracle_weight_is_explicit(self, rng):
        points = rng.uniform(-1.0, 1.0, size=(50, 3))
        sdf = np.where(np.arange(50) < 10, 0.0, 0.3)
        assert SampledPointOracle(points, sdf).surface_weight == 1.0
        assert SampledPointOracle(points, sdf, surface_weight=2.5).surface_weight == 2.5
        with pytest.raises(ConfigurationError):
            SampledPointOracle(points, sdf, surface_weight=0.0)

    def test_sampled_oracle_without_surface(self, rng):
        points = rng.uniform(-1, 1, size=(10, 3))
        with pytest.raises(ConfigurationError):
            SampledPointOracle(points, np.full(10, 0.5))

    def test_make_shape(self):
        assert isinstance(make_shape(ShapeType.torus, major_radius=0.4, minor_radius=0.1), Torus)
        with pytest.raises(ConfigurationError):
            make_shape("union")

    def test_invalid_radius(self):
        with pytest.raises(ConfigurationError):
            Sphere(-0.1)


@pytest.mark.unit
class TestSampling:
    def test_split_counts_at_full_batch(self):
        assert split_counts(49152) == (9830, 14746, 24576)

    def test_split_counts_sum(self):
        for batch in (1, 7, 100, 8192):
            assert sum(split_counts(batch)) == batch

    def test_batch_blocks(self, rng):
        task = SdfTask(Sphere(0.5), batch_size=1000)
        points, labels = sample_sdf_batch(task, rng)
        n_uniform, n_near, n_surface = split_counts(1000)
        assert points.shape == (1000, 3)
        assert np.all(np.abs(points) <= 1.0)
        np.testing.assert_array_equal(labels[-n_surface:], 0.0)
        near = labels[n_uniform : n_uniform + n_near]
        assert np.all(np.abs(near) < 0.1)
        np.testing.assert_allclose(labels[:n_uniform], Sphere(0.5).distance(points[:n_uniform]))

    def test_model_inputs_in_unit_cube(self, rng):
        x, y = SdfTask(Sphere(0.5), batch_size=200).sample_batch(rng)
        assert x.shape == (200, 3) and y.shape == (200, 1)
        assert np.all((x >= 0.0) & (x <= 1.0))

    def test_to_unit_cube(self):
        np.testing.assert_array_equal(to_unit_cube(np.array([[-1.0, 0.0, 1.0]])), [[0.0, 0.5, 1.0]])

    @pytest.mark.parametrize(
        "kwargs",
        [{"split": (0.5, 0.5, 0.5)}, {"epsilon": 0.0}, {"batch_size": 0}],
    )
    def test_invalid_task(self, kwargs):
        params = {"batch_size": 10, **kwargs}
        with pytest.raises((ConfigurationError, InputError)):
            SdfTask(Sphere(0.5), **params)

    def test_missing_oracle(self):
        with pytest.raises(ConfigurationError):
            SdfTask(None, batch_size=10)


@pytest.mark.unit
class TestLoss:
    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_residual_scaling_scales_loss_quadratically(self, rng, c):
        task = SdfTask(Sphere(0.5), batch_size=64)
        x, target = task.sample_batch(rng)
        residual = rng.normal(0.0, 0.05, size=target.shape)

        def loss_of(prediction):
            tape = Tape()
            return float(task.loss(tape, tape.constant(prediction), target).value)

        base = loss_of(target + residual)
        assert base > 0
        assert loss_of(target + c * residual) == pytest.approx(c * c * base, rel=1e-12)

    def test_exact_prediction_has_zero_loss(self, rng):
        task = SdfTask(Sphere(0.5), batch_size=32)
        _, target = task.sample_batch(rng)
        tape = Tape()
        assert float(task.loss(tape, tape.constant(target), target).value) == 0.0


@pytest.mark.unit
class TestEvaluation:
    def test_exact_predictor(self, rng):
        sphere = Sphere(0.5)
        report = sdf_eval_metrics(sphere.distance, sphere, n_samples=1000, grid=16, rng=rng)
        assert report.surface_error < 1e-12
        assert report.iou == 1.0

    def test_empty_union_iou(self, rng):
        tiny = Sphere(0.01)
        report = sdf_eval_metrics(lambda p: np.ones(len(p)), tiny, n_samples=10, grid=2, rng=rng)
        assert report.iou == 1.0

    def test_all_outside_predictor(self, rng):
        sphere = Sphere(0.5)
        report = sdf_eval_metrics(lambda p: np.ones(len(p)), sphere, n_samples=10, grid=8, rng=rng)
        assert report.iou == 0.0
        assert report.surface_error == 1.0

    def test_grid_too_small(self, rng):
        with pytest.raises(InputError):
            sdf_eval_metrics(Sphere(0.5).distance, Sphere(0.5), grid=1, rng=rng)

    def test_grid_centres(self):
        centres = grid_centers(4)
        assert centres.shape == (64, 3)
        assert centres.min() == pytest.approx(-0.75)

    def test_task_metric_uses_fixed_batch(self, tiny_sdf_config):
        from src.core.field_model import make_variant

        model = make_variant(tiny_sdf_config)
        task = SdfTask(Sphere(0.5), batch_size=64, eval_batch_size=256)
        assert task.evaluate(model) == task.evaluate(model)
