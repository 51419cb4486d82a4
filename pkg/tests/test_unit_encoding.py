import unittest

import numpy as np
from pydantic import ValidationError
from scipy.stats import chi2

from src.exceptions import InvalidParameterError, ShapeMismatchError
from src.models import HashGridTables
from src.schemas import HashGridConfig
from src.services.encoding import (
    encode,
    encode_backward,
    hash_index,
    init_tables,
    is_dense,
    level_indices,
    prepare_encoding,
)


class TestConfig(unittest.TestCase):

    def test_resolutions_grow_geometrically(self):
        config = HashGridConfig(levels=4, base_resolution=16, finest_resolution=128)
        self.assertAlmostEqual(config.growth, 2.0)
        self.assertEqual(config.resolutions(), [16, 32, 64, 128])

    def test_finest_resolution_from_grid(self):
        config = HashGridConfig().resolved((64, 48))
        self.assertEqual(config.finest_resolution, 32)
        self.assertEqual(config.resolutions(), [16, 20, 25, 32])
        self.assertEqual(HashGridConfig().resolved((16, 16)).finest_resolution, 16)
        self.assertEqual(HashGridConfig(finest_resolution=128).resolved((64, 64)).finest_resolution, 128)

    def test_invalid_config(self):
        with self.assertRaises(ValidationError):
            HashGridConfig(table_size=1000)
        with self.assertRaises(ValidationError):
            HashGridConfig(base_resolution=32, finest_resolution=16)


class TestHashing(unittest.TestCase):

    def test_dense_levels_are_row_major(self):
        self.assertTrue(is_dense(16, 256))
        rows = level_indices(np.array([0, 3, 15]), np.array([0, 2, 15]), 16, 256)
        self.assertEqual(rows.tolist(), [0, 50, 255])

    def test_hashed_levels_stay_in_table(self):
        rng = np.random.default_rng(0)
        corners = rng.integers(0, 2048, size=(10_000, 2))
        rows = level_indices(corners[:, 0], corners[:, 1], 2048, 1024)
        self.assertFalse(is_dense(2048, 1024))
        self.assertGreaterEqual(rows.min(), 0)
        self.assertLess(rows.max(), 1024)

    def test_hash_is_uniform(self):
        rng = np.random.default_rng(1)
        corners = rng.integers(0, 2048, size=(200_000, 2))
        counts = np.bincount(level_indices(corners[:, 0], corners[:, 1], 2048, 1024), minlength=1024)
        expected = corners.shape[0] / 1024
        statistic = float(np.sum((counts - expected) ** 2 / expected))
        self.assertGreater(chi2.sf(statistic, df=1023), 1e-3)

    def test_hash_index(self):
        config = HashGridConfig(levels=2, table_size=1024, base_resolution=16, finest_resolution=2048)
        self.assertEqual(hash_index(0, (3, 2), config), 50)
        self.assertEqual(hash_index(1, (1, 0), config), 1)
        self.assertEqual(hash_index(1, (0, 1), config), 2654435761 & 1023)
        with self.assertRaises(InvalidParameterError):
            hash_index(2, (0, 0), config)


class TestEncode(unittest.TestCase):

    def setUp(self):
        self.config = HashGridConfig(levels=3, features=2, table_size=64, base_resolution=4, finest_resolution=16)
        self.tables = init_tables(self.config, np.random.default_rng(2), "float64")
        self.tables.features[:] = np.random.default_rng(3).standard_normal(self.tables.features.shape)

    def test_output_shape(self):
        coords = np.random.default_rng(4).random((50, 2))
        self.assertEqual(encode(coords, self.tables).shape, (50, 6))

    def test_init_range(self):
        tables = init_tables(self.config, np.random.default_rng(5))
        self.assertEqual(tables.features.dtype, np.float32)
        self.assertLessEqual(np.abs(tables.features).max(), 1e-4)

    def test_vertex_returns_vertex_feature(self):
        features = encode(np.array([[0.0, 0.0], [1.0, 1.0]]), self.tables)
        for level, resolution in enumerate(self.config.resolutions()):
            corner = level_indices(np.array([resolution - 1]), np.array([resolution - 1]), resolution, 64)[0]
            origin = level_indices(np.array([0]), np.array([0]), resolution, 64)[0]
            np.testing.assert_allclose(features[0, 2 * level:2 * level + 2], self.tables.features[level, origin])
            np.testing.assert_allclose(features[1, 2 * level:2 * level + 2], self.tables.features[level, corner])

    def test_bilinear_midpoint(self):
        config = HashGridConfig(levels=1, features=1, table_size=16, base_resolution=2, finest_resolution=2)
        tables = HashGridTables(np.array([[[1.0], [2.0], [3.0], [4.0]] + [[0.0]] * 12]), config)
        self.assertAlmostEqual(encode(np.array([[0.5, 0.5]]), tables)[0, 0], 2.5)
        self.assertAlmostEqual(encode(np.array([[0.0, 0.25]]), tables)[0, 0], 1.25)

    def test_lipschitz_bound(self):
        rng = np.random.default_rng(7)
        p = 0.01 + 0.98 * rng.random((500, 2))
        q = p + rng.uniform(-0.01, 0.01, size=p.shape)
        change = np.abs(encode(q, self.tables) - encode(p, self.tables)).reshape(500, self.config.levels, 2)
        step = np.abs(q - p).sum(axis=1)
        for level, resolution in enumerate(self.config.resolutions()):
            largest = np.abs(self.tables.features[level]).max()
            bound = 2.0 * largest * (resolution - 1) * step
            self.assertTrue(np.all(change[:, level].max(axis=1) <= bound + 1e-12), level)

    def test_continuous_across_cells(self):
        vertex_line = 5.0 / (self.config.resolutions()[-1] - 1)
        features = encode(np.array([[vertex_line - 1e-9, 0.37], [vertex_line + 1e-9, 0.37]]), self.tables)
        np.testing.assert_allclose(features[0], features[1], atol=1e-6)

    def test_out_of_range_is_clamped(self):
        plan = prepare_encoding(np.array([[-0.5, 0.5], [0.2, 1.5], [0.5, 0.5]]), self.config)
        self.assertEqual(plan.clamped, 2)
        inside = encode(np.array([[0.0, 0.5], [0.2, 1.0]]), self.tables)
        outside = encode(np.array([[-0.5, 0.5], [0.2, 1.5]]), self.tables)
        np.testing.assert_allclose(outside, inside)

    def test_bad_coordinates(self):
        with self.assertRaises(ShapeMismatchError):
            prepare_encoding(np.zeros((4, 3)), self.config)

    def test_backward_is_transpose(self):
        rng = np.random.default_rng(6)
        coords = rng.random((40, 2))
        upstream = rng.standard_normal((40, 6))
        delta = rng.standard_normal(self.tables.features.shape)
        shifted = HashGridTables(self.tables.features + delta, self.config)
        change = encode(coords, shifted) - encode(coords, self.tables)
        grad = encode_backward(coords, upstream, self.tables)
        self.assertAlmostEqual(float(np.sum(change * upstream)), float(np.sum(delta * grad)), places=9)

    def test_backward_accumulates_collisions(self):
        coords = np.array([[0.3, 0.3], [0.3, 0.3]])
        once = encode_backward(coords[:1], np.ones((1, 6)), self.tables)
        twice = encode_backward(coords, np.ones((2, 6)), self.tables)
        np.testing.assert_allclose(twice, 2 * once)
        self.assertEqual(twice.shape, self.tables.features.shape)

    def test_backward_shape_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            encode_backward(np.zeros((3, 2)), np.zeros((3, 5)), self.tables)


if __name__ == '__main__':
    unittest.main()
