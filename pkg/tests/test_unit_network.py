import unittest

import numpy as np

from src.exceptions import ActivationCacheError, ShapeMismatchError
from src.models import MlpParams
from src.schemas import HashGridConfig
from src.services.network import (
    evaluate_image,
    init_model,
    mlp_backward,
    mlp_forward,
    outputs_to_stack,
    voxel_coordinates,
)


def random_mlp(rng, width_in=6, hidden=5, n_contrasts=2) -> MlpParams:
    shapes = [(width_in, hidden), (hidden,), (hidden, hidden), (hidden,), (hidden, 2 * n_contrasts), (2 * n_contrasts,)]
    return MlpParams(*(rng.standard_normal(shape) for shape in shapes))


class TestInit(unittest.TestCase):

    def setUp(self):
        self.config = HashGridConfig(levels=2, features=2, table_size=64, base_resolution=4, finest_resolution=8)

    def test_initial_image_is_zero(self):
        model = init_model(self.config, 3, hidden_width=8, seed=0)
        image = evaluate_image(model, (6, 5))
        self.assertEqual(image.data.shape, (3, 6, 5))
        self.assertTrue(np.all(image.data == 0))

    def test_shapes_and_ranges(self):
        model = init_model(self.config, 3, hidden_width=8, seed=0)
        self.assertEqual(model.mlp.w0.shape, (4, 8))
        self.assertEqual(model.mlp.w2.shape, (8, 6))
        self.assertEqual(model.mlp.n_contrasts, 3)
        self.assertLessEqual(np.abs(model.mlp.w0).max(), 0.5)
        self.assertLessEqual(np.abs(model.mlp.w1).max(), 1 / np.sqrt(8))
        self.assertEqual(model.tables.features.shape, (2, 64, 2))
        self.assertEqual(set(model.parameters()), {"tables", *MlpParams.NAMES})

    def test_seeded(self):
        first = init_model(self.config, 2, seed=4, dtype="float64")
        second = init_model(self.config, 2, seed=4, dtype="float64")
        for name, value in first.parameters().items():
            self.assertTrue(np.array_equal(value, second.parameters()[name]), name)
            self.assertEqual(value.dtype, np.float64)


class TestForwardBackward(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(10)
        self.mlp = random_mlp(self.rng)
        self.features = self.rng.standard_normal((7, 6))
        self.target = self.rng.standard_normal((7, 2)) + 1j * self.rng.standard_normal((7, 2))

    def loss(self, mlp=None, features=None):
        values = mlp_forward(self.features if features is None else features, mlp or self.mlp)
        return float(np.sum(np.abs(values - self.target) ** 2))

    def test_channel_pairing(self):
        mlp = random_mlp(self.rng)
        values, cache = mlp_forward(self.features, mlp, return_cache=True)
        raw = cache.h1 @ mlp.w2 + mlp.b2
        np.testing.assert_allclose(values.real, raw[:, 0::2])
        np.testing.assert_allclose(values.imag, raw[:, 1::2])

    def test_parameter_gradients(self):
        values, cache = mlp_forward(self.features, self.mlp, return_cache=True)
        grads, _ = mlp_backward(cache, self.mlp, values - self.target)
        step = 1e-6
        for name in MlpParams.NAMES:
            array = getattr(self.mlp, name)
            for index in list(np.ndindex(array.shape))[:4]:
                original = array[index]
                array[index] = original + step
                plus = self.loss()
                array[index] = original - step
                minus = self.loss()
                array[index] = original
                self.assertAlmostEqual((plus - minus) / (2 * step), grads[name][index], delta=1e-5 * max(1.0, abs(grads[name][index])))

    def test_feature_gradients(self):
        values, cache = mlp_forward(self.features, self.mlp, return_cache=True)
        _, d_features = mlp_backward(cache, self.mlp, values - self.target)
        step = 1e-6
        for index in ((0, 0), (3, 2), (6, 5)):
            plus, minus = self.features.copy(), self.features.copy()
            plus[index] += step
            minus[index] -= step
            numeric = (self.loss(features=plus) - self.loss(features=minus)) / (2 * step)
            self.assertAlmostEqual(numeric, d_features[index], delta=1e-5 * max(1.0, abs(d_features[index])))

    def test_missing_cache(self):
        with self.assertRaises(ActivationCacheError):
            mlp_backward(None, self.mlp, np.zeros((7, 2), dtype=complex))

    def test_gradient_shape_mismatch(self):
        _, cache = mlp_forward(self.features, self.mlp, return_cache=True)
        with self.assertRaises(ShapeMismatchError):
            mlp_backward(cache, self.mlp, np.zeros((7, 3), dtype=complex))

    def test_feature_width_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            mlp_forward(np.zeros((2, 5)), self.mlp)


class TestGrid(unittest.TestCase):

    def test_voxel_coordinates(self):
        coords = voxel_coordinates((2, 4))
        self.assertEqual(coords.shape, (8, 2))
        np.testing.assert_allclose(coords[0], [0.25, 0.125])
        np.testing.assert_allclose(coords[5], [0.75, 0.375])

    def test_outputs_to_stack(self):
        values = np.arange(12).reshape(6, 2) * (1 + 1j)
        stack = outputs_to_stack(values, (2, 3))
        self.assertEqual(stack.shape, (2, 2, 3))
        self.assertEqual(stack[1, 0, 2], values[2, 1])


if __name__ == '__main__':
    unittest.main()
