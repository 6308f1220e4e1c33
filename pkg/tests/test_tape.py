"""Tape primitives and losses"""

import math

import numpy as np
import pytest

from src.core.errors import ConfigurationError, InputError, StateError
from src.core.params import ModelParams
from src.core.tape import Tape, backward


def _linear_tape(weight, bias=None) -> Tape:
    arrays = {"w": np.asarray(weight, dtype=np.float64)}
    if bias is not None:
        arrays["b"] = np.asarray(bias, dtype=np.float64)
    return Tape(params=ModelParams.pack(arrays, dtype=np.float64))


@pytest.mark.unit
class TestAffine:
    def test_value_is_scaled_product_plus_bias(self):
        tape = _linear_tape([[1.0, 2.0], [3.0, 4.0]], [0.5, -0.5])
        x = tape.constant(np.array([[1.0, 1.0]]))
        out = tape.affine(x, "w", "b", scale=2.0)
        np.testing.assert_array_equal(out.value, [[6.5, 13.5]])

    def test_dimension_mismatch(self):
        tape = _linear_tape(np.ones((2, 3)))
        x = tape.constant(np.ones((4, 2)))
        with pytest.raises(ConfigurationError):
            tape.affine(x, "w")

    def test_weight_and_bias_gradients(self):
        tape = _linear_tape([[1.0, -1.0]], [0.0])
        x_value = np.array([[1.0, 2.0], [3.0, 5.0]])
        out = tape.affine(tape.constant(x_value), "w", "b", scale=3.0)
        tape.sum([tape.mse_loss(out, np.zeros((2, 1)))])
        grads = tape.params.views_of(tape.backward())

        y = out.value
        upstream = 2.0 * y / 2
        np.testing.assert_allclose(grads["w"], 3.0 * upstream.T @ x_value)
        np.testing.assert_allclose(grads["b"], upstream.sum(axis=0))


@pytest.mark.unit
class TestSine:
    def test_scaled_sine(self):
        tape = Tape()
        z = tape.constant(np.array([[0.006 * math.pi]]))
        out = tape.sine_act(z, alpha=100.0)
        assert out.value[0, 0] == pytest.approx(0.9510565, abs=1e-7)

    def test_output_is_bounded(self, rng):
        tape = Tape()
        z = tape.constant(rng.normal(0.0, 1e3, size=(256, 4)))
        out = tape.sine_act(z, alpha=100.0)
        assert np.all(np.abs(out.value) <= 1.0)

    def test_non_positive_alpha(self):
        tape = Tape()
        with pytest.raises(ConfigurationError):
            tape.sine_act(tape.constant(np.zeros((1, 1))), alpha=0.0)


@pytest.mark.unit
class TestLosses:
    def test_mse_value(self):
        tape = _linear_tape(np.eye(3))
        y = tape.affine(tape.constant(np.array([[1.0, 2.0, 3.0]])), "w")
        loss = tape.mse_loss(y, np.zeros((1, 3)))
        assert float(loss.value) == 14.0
        grads = tape.params.views_of(backward(tape))
        # dL/dW = 2y ⊗ x
        np.testing.assert_allclose(grads["w"], 2.0 * np.outer([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))

    def test_mse_empty_batch(self):
        tape = Tape()
        with pytest.raises(InputError):
            tape.mse_loss(tape.constant(np.zeros((0, 3))), np.zeros((0, 3)))

    def test_mape_value(self):
        tape = Tape()
        y = tape.constant(np.array([[0.1], [0.0]]))
        loss = tape.mape_sq_loss(y, np.array([[0.0], [0.1]]), epsilon=0.01)
        # (0.01/0.01 + 0.01/0.02) / 2
        assert float(loss.value) == pytest.approx(0.75)

    def test_mape_rejects_non_positive_epsilon(self):
        tape = Tape()
        with pytest.raises(ConfigurationError):
            tape.mape_sq_loss(tape.constant(np.zeros((1, 1))), np.zeros((1, 1)), epsilon=0.0)


@pytest.mark.unit
class TestBackward:
    def test_without_forward(self):
        with pytest.raises(StateError):
            Tape().backward()

    def test_non_scalar_head(self):
        tape = Tape()
        tape.constant(np.zeros((2, 2)))
        with pytest.raises(StateError):
            tape.backward()

    def test_visits_ops_in_reverse_and_clears(self):
        tape = _linear_tape(np.eye(2))
        a = tape.affine(tape.constant(np.ones((1, 2))), "w")
        b = tape.sine_act(a)
        tape.mse_loss(tape.add(a, b), np.zeros((1, 2)))
        tape.backward()
        assert tape.trace == ["mse_loss", "add", "sine", "affine", "constant"]
        assert len(tape) == 0

    def test_concat_and_sum_route_gradients(self):
        tape = _linear_tape(np.eye(2))
        x = tape.constant(np.array([[1.0, 2.0]]))
        a = tape.affine(x, "w")
        both = tape.concat([a, a])
        total = tape.sum([both, both])
        tape.mse_loss(total, np.zeros((1, 4)))
        grads = tape.params.views_of(tape.backward())
        # total = 2·[Wx, Wx]; L = 8·|Wx|²  →  dL/dW = 16·Wx ⊗ x
        np.testing.assert_allclose(grads["w"], 16.0 * np.outer([1.0, 2.0], [1.0, 2.0]))

    def test_backward_is_linear_in_seed(self, rng):
        weight = rng.normal(size=(3, 2))

        def grads_for(seed: float) -> np.ndarray:
            tape = _linear_tape(weight)
            a = tape.affine(tape.constant(np.array([[0.3, -0.8], [1.2, 0.4]])), "w", scale=4.0)
            tape.mse_loss(tape.sine_act(a), np.zeros((2, 3)))
            return tape.backward(seed)

        base = grads_for(1.0)
        assert np.abs(base).max() > 0
        for seed in (2.5, -0.75):
            np.testing.assert_allclose(grads_for(seed), seed * base, rtol=1e-12, atol=1e-15)


@pytest.mark.unit
class TestScatter:
    @staticmethod
    def _scatter_backward(rows: np.ndarray, contributions: np.ndarray, n_rows: int) -> np.ndarray:
        features = contributions.shape[1]
        tape = Tape(params=ModelParams.pack({"t": np.zeros((n_rows, features))}, dtype=np.float64))
        tape.record("gather", np.zeros(()), backward=lambda upstream: tape.scatter("t", rows, contributions * upstream) or ())
        return tape.backward().reshape(n_rows, features)

    def test_repeated_rows_accumulate(self, rng):
        rows = rng.integers(0, 5, size=200)
        contributions = rng.normal(size=(200, 2))
        expected = np.zeros((5, 2))
        for row, value in zip(rows, contributions):
            expected[row] += value
        np.testing.assert_allclose(self._scatter_backward(rows, contributions, 5), expected, rtol=1e-12, atol=1e-14)

    def test_feature_count_mismatch(self):
        tape = Tape(params=ModelParams.pack({"t": np.zeros((4, 2))}, dtype=np.float64))
        tape.record("gather", np.zeros(()), backward=lambda upstream: tape.scatter("t", np.array([0, 1]), np.ones((2, 3))) or ())
        with pytest.raises(ConfigurationError):
            tape.backward()
