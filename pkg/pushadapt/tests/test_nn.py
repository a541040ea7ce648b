import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.test import SimpleTestCase

from pushadapt.nn import (
    BASELINE_OUTPUT_DIM,
    LayerParams,
    MlpParams,
    mlp_backward,
    mlp_forward,
    mlp_init,
)


def reference_forward(params, x):
    activation = np.asarray(x, dtype=float)
    for index, layer in enumerate(params.layers):
        z = layer.weights @ activation + layer.biases
        activation = z if index == len(params.layers) - 1 else np.where(z > 0, z, 0.0)
    return activation


class InitTests(SimpleTestCase):
    def test_shapes_and_count(self):
        params = mlp_init(0)
        self.assertEqual(params.dims, (4, 16, 16, 16, 4))
        self.assertEqual(params.parameter_count, 4 * 16 + 16 + 2 * (16 * 16 + 16) + 16 * 4 + 4)
        self.assertEqual(mlp_init(0, output_dim=BASELINE_OUTPUT_DIM).dims[-1], 3)

    def test_seeded(self):
        assert_array_equal(mlp_init(11).to_vector(), mlp_init(11).to_vector())
        self.assertFalse(np.array_equal(mlp_init(11).to_vector(), mlp_init(12).to_vector()))

    def test_glorot_bounds_and_zero_biases(self):
        for layer in mlp_init(5).layers:
            fan_out, fan_in = layer.weights.shape
            self.assertLessEqual(np.abs(layer.weights).max(), np.sqrt(6.0 / (fan_in + fan_out)))
            assert_array_equal(layer.biases, 0.0)

    def test_vector_round_trip(self):
        params = mlp_init(2)
        rebuilt = params.from_vector(params.to_vector())
        for name, array in params.named_arrays().items():
            assert_array_equal(rebuilt.named_arrays()[name], array)
        with self.assertRaises(ValueError):
            params.from_vector(np.zeros(3))


class ForwardTests(SimpleTestCase):
    def test_zero_network(self):
        params = mlp_init(0).zeros_like()
        out, _ = mlp_forward(params, [0.3, -1.0, 2.0, 0.5])
        assert_array_equal(out, np.zeros(4))

    def test_bias_passes_through(self):
        params = mlp_init(0).zeros_like()
        params.layers[-1].biases[:] = [1.0, 2.0, 3.0, 4.0]
        out, _ = mlp_forward(params, [5.0, 6.0, 7.0, 8.0])
        assert_array_equal(out, [1.0, 2.0, 3.0, 4.0])

    def test_matches_reference(self):
        rng = np.random.default_rng(0)
        params = mlp_init(3)
        for layer in params.layers:
            layer.biases[:] = rng.normal(scale=0.1, size=layer.biases.shape)
        x = rng.normal(size=(50, 4))
        out, _ = mlp_forward(params, x)
        expected = np.stack([reference_forward(params, row) for row in x])
        assert_allclose(out, expected, rtol=1e-12, atol=1e-14)

    def test_single_and_batch_agree(self):
        params = mlp_init(4)
        x = np.random.default_rng(1).normal(size=(3, 4))
        batch, _ = mlp_forward(params, x)
        single, _ = mlp_forward(params, x[1])
        self.assertEqual(single.shape, (4,))
        assert_allclose(single, batch[1], rtol=1e-14)

    def test_piecewise_linear(self):
        params = mlp_init(6)
        x = np.random.default_rng(2).normal(size=4)
        base, _ = mlp_forward(params, x)
        scaled, _ = mlp_forward(params, 1.000001 * x)
        # без смещений сеть положительно однородна
        assert_allclose(scaled, 1.000001 * base, rtol=1e-9)


class BackwardTests(SimpleTestCase):
    def test_zero_output_grad(self):
        params = mlp_init(0)
        _, tape = mlp_forward(params, [0.1, 0.2, 0.3, 0.4])
        grads, input_grad = mlp_backward(params, tape, np.zeros(4))
        assert_array_equal(grads.to_vector(), 0.0)
        assert_array_equal(input_grad, 0.0)

    def test_matches_finite_differences(self):
        step = 1e-6
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            params = mlp_init(seed)
            for layer in params.layers:
                layer.biases[:] = rng.normal(scale=0.1, size=layer.biases.shape)
            x = rng.normal(size=4)
            g = rng.normal(size=4)
            _, tape = mlp_forward(params, x)
            grads, _ = mlp_backward(params, tape, g)
            theta = params.to_vector()
            numeric = np.empty_like(theta)
            for index in range(theta.size):
                shift = np.zeros_like(theta)
                shift[index] = step
                plus, _ = mlp_forward(params.from_vector(theta + shift), x)
                minus, _ = mlp_forward(params.from_vector(theta - shift), x)
                numeric[index] = g @ (plus - minus) / (2 * step)
            assert_allclose(grads.to_vector(), numeric, rtol=1e-5, atol=1e-8)

    def test_input_grad_when_all_units_active(self):
        rng = np.random.default_rng(7)
        dims = (4, 16, 16, 16, 4)
        params = MlpParams([
            LayerParams(rng.uniform(0.1, 0.5, size=(fan_out, fan_in)), rng.uniform(0.1, 0.5, size=fan_out))
            for fan_in, fan_out in zip(dims[:-1], dims[1:])
        ])
        g = rng.normal(size=4)
        _, tape = mlp_forward(params, [0.2, 0.4, 0.1, 0.3])
        _, input_grad = mlp_backward(params, tape, g)
        linear = params.layers[3].weights @ params.layers[2].weights @ params.layers[1].weights @ params.layers[0].weights
        assert_allclose(input_grad, g @ linear, rtol=1e-12)

    def test_batch_grads_are_summed(self):
        params = mlp_init(8)
        rng = np.random.default_rng(9)
        x = rng.normal(size=(5, 4))
        g = rng.normal(size=(5, 4))
        _, tape = mlp_forward(params, x)
        batch_grads, batch_input = mlp_backward(params, tape, g)
        total = np.zeros(params.parameter_count)
        for row in range(5):
            _, single_tape = mlp_forward(params, x[row])
            single, single_input = mlp_backward(params, single_tape, g[row])
            total += single.to_vector()
            assert_allclose(batch_input[row], single_input, rtol=1e-12, atol=1e-15)
        assert_allclose(batch_grads.to_vector(), total, rtol=1e-10, atol=1e-14)
