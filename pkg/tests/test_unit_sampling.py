import unittest

import numpy as np
from scipy.spatial import cKDTree

from src.exceptions import CalibrationError, InvalidParameterError
from src.models import SamplingMask
from src.schemas import MaskParams
from src.services.operators import kspace_radius
from src.services.sampling import (
    acceleration_of,
    complementary_mask_set,
    default_center_radius,
    full_mask_set,
    psf_sidelobe_ratio,
    radius_map,
    scan_time_minutes,
    vd_poisson_mask,
)


def min_distance_violations(mask: SamplingMask) -> int:
    radii = radius_map(mask.grid, mask.r0, mask.alpha)
    outside = mask.bits & (kspace_radius(mask.grid) > mask.center_radius)
    points = np.argwhere(outside)
    tree = cKDTree(points)
    pairs = tree.query_pairs(r=float(radii.max()), output_type="ndarray")
    if pairs.size == 0:
        return 0
    p, q = points[pairs[:, 0]], points[pairs[:, 1]]
    distances = np.hypot(*(p - q).T)
    limit = np.minimum(radii[p[:, 0], p[:, 1]], radii[q[:, 0], q[:, 1]]) * (1 - 1e-9)
    return int(np.sum(distances < limit))


class TestPoissonMask(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.masks = {r: vd_poisson_mask((160, 160), r, seed=11) for r in (4, 8, 12)}

    def test_acceleration_within_tolerance(self):
        for target, mask in self.masks.items():
            self.assertAlmostEqual(acceleration_of(mask), target, delta=0.1 * target)
            self.assertGreaterEqual(int(mask.bits.sum()), int(160 * 160 / target * 0.9))

    def test_center_fully_sampled(self):
        for mask in self.masks.values():
            center = kspace_radius((160, 160)) <= mask.center_radius
            self.assertEqual(mask.center_radius, default_center_radius((160, 160)))
            self.assertTrue(np.all(mask.bits[center]))

    def test_minimum_distance(self):
        for mask in self.masks.values():
            self.assertEqual(min_distance_violations(mask), 0)

    def test_denser_at_center(self):
        mask = self.masks[8]
        radius = kspace_radius((160, 160))
        inner = mask.bits[(radius > mask.center_radius) & (radius < 30)].mean()
        outer = mask.bits[radius > 60].mean()
        self.assertGreater(inner, outer)

    def test_incoherent_psf(self):
        self.assertLess(psf_sidelobe_ratio(self.masks[8]), MaskParams().psf_sidelobe_threshold)

    def test_deterministic(self):
        again = vd_poisson_mask((160, 160), 8, seed=11)
        self.assertTrue(np.array_equal(again.bits, self.masks[8].bits))
        self.assertEqual(again.r0, self.masks[8].r0)

    def test_no_acceleration_is_full(self):
        mask = vd_poisson_mask((32, 32), 1.0)
        self.assertTrue(mask.bits.all())
        self.assertEqual(acceleration_of(mask), 1.0)

    def test_center_too_large(self):
        with self.assertRaises(CalibrationError) as context:
            vd_poisson_mask((64, 64), 8, center_radius=20)
        self.assertEqual(context.exception.code, "calibration")
        self.assertIn("achievable", context.exception.detail)

    def test_acceleration_too_high(self):
        with self.assertRaises(CalibrationError):
            vd_poisson_mask((16, 16), 500)

    def test_invalid_requests(self):
        with self.assertRaises(InvalidParameterError):
            vd_poisson_mask((32, 32), 0.5)
        with self.assertRaises(InvalidParameterError):
            vd_poisson_mask((32, 32), 4, center_radius=16)


class TestMaskSet(unittest.TestCase):

    def test_union_exceeds_single_mask(self):
        masks = complementary_mask_set((160, 160), 8, None, 10, base_seed=3)
        self.assertEqual(masks.seeds, list(range(3, 13)))
        coverage = masks.union().mean()
        self.assertGreater(coverage, max(mask.bits.mean() for mask in masks.masks))
        self.assertGreater(coverage, 1 / 8 * 1.1)

    def test_singleton_matches_single_mask(self):
        masks = complementary_mask_set((32, 32), 4, None, 1, base_seed=5)
        single = vd_poisson_mask((32, 32), 4, seed=5)
        self.assertTrue(np.array_equal(masks.masks[0].bits, single.bits))

    def test_same_seed_same_set(self):
        first = complementary_mask_set((32, 32), 4, 2.0, 3, base_seed=1)
        second = complementary_mask_set((32, 32), 4, 2.0, 3, base_seed=1)
        self.assertTrue(np.array_equal(first.bits, second.bits))

    def test_complement(self):
        masks = complementary_mask_set((32, 32), 4, None, 2)
        self.assertTrue(np.array_equal(masks.complement().bits, ~masks.bits))

    def test_full_mask_set(self):
        masks = full_mask_set((8, 8), 3)
        self.assertEqual(masks.bits.shape, (3, 8, 8))
        self.assertTrue(masks.bits.all())


class TestMeasures(unittest.TestCase):

    def test_acceleration_of_half(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[:4] = True
        self.assertEqual(acceleration_of(SamplingMask(bits)), 2.0)

    def test_acceleration_of_empty(self):
        with self.assertRaises(InvalidParameterError):
            acceleration_of(SamplingMask(np.zeros((8, 8), dtype=bool)))

    def test_scan_time(self):
        self.assertAlmostEqual(scan_time_minutes(13.47, 12), 1.1225)


if __name__ == '__main__':
    unittest.main()
