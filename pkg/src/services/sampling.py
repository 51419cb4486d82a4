"""Variable-density Poisson disk undersampling masks with a fully sampled k-space centre"""

import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from src.exceptions import CalibrationError, InvalidParameterError
from src.models import MaskSet, SamplingMask
from src.services.operators import ifft2c, kspace_radius

logger = logging.getLogger(__name__)

# expected acceptance of random sequential placement when the local radius exceeds one grid step
PACKING_DENSITY = 0.7


def default_center_radius(grid: Tuple[int, int]) -> float:
    """Radius of the fully sampled centre disk: 8 index units at 160x160, scaled with the grid."""
    return 8.0 * min(grid) / 160.0


def radius_map(grid: Tuple[int, int], r0: float, alpha: float) -> np.ndarray:
    """
    The radius_map function evaluates the minimum-distance law r(k) = r0 * (1 + alpha * |k| / |k|_max)
    at every grid point.

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :param r0: Radius at the k-space centre in index units
    :type r0: float
    :param alpha: Linear growth towards the k-space corner
    :type alpha: float
    :return: Radius per grid point (Vy, Vz)
    :rtype: np.ndarray
    """
    kmax = math.hypot(grid[0] // 2, grid[1] // 2)
    return r0 * (1.0 + alpha * kspace_radius(grid) / kmax)


@lru_cache(maxsize=64)
def _offset_distances(width: int) -> np.ndarray:
    offsets = np.arange(-width, width + 1)
    return np.hypot(offsets[:, None], offsets[None, :])


def _throw_darts(radii: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """
    Random sequential placement over the grid points listed in ``candidates``.
    ``blocked`` holds, per grid point, the smallest distance to an accepted point q that lies
    inside q's own radius, so a candidate p conflicts exactly when blocked[p] < r(p).
    """
    vy, vz = radii.shape
    pad = int(math.ceil(radii.max()))
    blocked = np.full((vy + 2 * pad, vz + 2 * pad), np.inf)
    bits = np.zeros((vy, vz), dtype=bool)
    flat_radii = radii.ravel()
    for flat in candidates.tolist():
        r = flat_radii[flat]
        y, z = divmod(flat, vz)
        if blocked[y + pad, z + pad] < r:
            continue
        bits[y, z] = True
        width = int(math.ceil(r))
        distances = _offset_distances(width)
        view = blocked[y + pad - width:y + pad + width + 1, z + pad - width:z + pad + width + 1]
        np.minimum(view, np.where(distances < r, distances, np.inf), out=view)
    return bits


def _check_mask_request(grid: Tuple[int, int], target_r: float, center_radius: float) -> None:
    if min(grid) < 1:
        raise InvalidParameterError(f"invalid grid {grid}")
    if target_r < 1:
        raise InvalidParameterError("target R must be at least 1")
    if center_radius < 0 or center_radius >= min(grid) / 2:
        raise InvalidParameterError("center_radius must be non-negative and smaller than half the smallest grid dimension")


def vd_poisson_mask(grid: Tuple[int, int], target_r: float, center_radius: Optional[float] = None, seed: int = 0,
                    alpha: float = 2.5, tolerance: float = 0.05, max_iterations: int = 40,
                    contrast: int = 0) -> SamplingMask:
    """
    The vd_poisson_mask function places k-space samples by dart throwing with a radius that grows
    linearly towards the k-space edge, and always samples the centre disk. The centre radius r0 is
    calibrated by bisection until the sample count lies within ``tolerance`` of Vy*Vz / target_r.
    Every evaluation replays the same seeded candidate order, so the result depends only on the inputs.

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :param target_r: Requested acceleration R >= 1
    :type target_r: float
    :param center_radius: Fully sampled centre radius in index units, scaled default when None
    :type center_radius: float | None
    :param seed: Seed of the candidate order
    :type seed: int
    :param alpha: Radius growth from centre to edge
    :type alpha: float
    :param tolerance: Allowed relative deviation of the sample count
    :type tolerance: float
    :param max_iterations: Maximum number of bisection steps
    :type max_iterations: int
    :param contrast: Contrast index stored on the mask
    :type contrast: int
    :return: Calibrated sampling mask
    :rtype: SamplingMask
    """
    grid = (int(grid[0]), int(grid[1]))
    if center_radius is None:
        center_radius = default_center_radius(grid)
    _check_mask_request(grid, target_r, center_radius)
    total = grid[0] * grid[1]
    target = total / target_r
    meta = dict(contrast=contrast, seed=seed, center_radius=center_radius, target_r=target_r, alpha=alpha)

    if total <= target * (1 + tolerance):
        return SamplingMask(np.ones(grid, dtype=bool), r0=0.0, **meta)

    center = kspace_radius(grid) <= center_radius
    n_center = int(center.sum())
    if n_center > target * (1 + tolerance):
        raise CalibrationError(f"centre disk alone holds {n_center} samples, more than R={target_r:g} allows",
                               achievable=(1.0, total / n_center))

    outside = np.flatnonzero(~center.ravel())
    candidates = np.random.default_rng(seed).permutation(outside)
    unit = radius_map(grid, 1.0, alpha).ravel()[outside]

    def place(r0: float) -> np.ndarray:
        bits = _throw_darts(radius_map(grid, r0, alpha), candidates)
        return bits | center

    lo, hi = 1.0 / (1.0 + alpha), float(max(grid))
    sparsest = int(place(hi).sum())
    if sparsest > target * (1 + tolerance):
        raise CalibrationError(f"R={target_r:g} is too high for grid {grid[0]}x{grid[1]}",
                               achievable=(1.0, total / sparsest))

    def expected(r0: float) -> float:
        return n_center + np.minimum(1.0, PACKING_DENSITY / (r0 * unit) ** 2).sum() - target

    r0 = brentq(expected, lo, hi) if expected(hi) < 0 else math.sqrt(lo * hi)
    for _ in range(max_iterations):
        bits = place(r0)
        count = int(bits.sum())
        logger.debug(f"seed={seed} r0={r0:.6f} count={count} target={target:.1f}")
        if abs(count - target) <= tolerance * target:
            return SamplingMask(bits, r0=r0, **meta)
        if count > target:
            lo = r0
        else:
            hi = r0
        r0 = math.sqrt(lo * hi)
    raise CalibrationError(f"r0 bisection did not reach R={target_r:g} within {max_iterations} iterations",
                           achievable=(1.0, total / sparsest))


def complementary_mask_set(grid: Tuple[int, int], target_r: float, center_radius: Optional[float], n: int,
                           base_seed: int = 0, **options) -> MaskSet:
    """
    The complementary_mask_set function draws one mask per contrast from seeds base_seed + n,
    so that the contrasts sample different outer k-space locations.

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :param target_r: Acceleration per mask
    :type target_r: float
    :param center_radius: Shared centre radius, scaled default when None
    :type center_radius: float | None
    :param n: Number of contrasts
    :type n: int
    :param base_seed: Seed of the first contrast
    :type base_seed: int
    :param options: alpha, tolerance and max_iterations forwarded to vd_poisson_mask
    :return: N masks sharing grid and centre radius
    :rtype: MaskSet
    """
    if n < 1:
        raise InvalidParameterError("a mask set needs at least one contrast")
    if center_radius is None:
        center_radius = default_center_radius(grid)
    return MaskSet([
        vd_poisson_mask(grid, target_r, center_radius, seed=base_seed + index, contrast=index, **options)
        for index in range(n)
    ])


def full_mask_set(grid: Tuple[int, int], n: int) -> MaskSet:
    """Fully sampled masks, used for the reference reconstruction."""
    if n < 1:
        raise InvalidParameterError("a mask set needs at least one contrast")
    return MaskSet([SamplingMask(np.ones(grid, dtype=bool), contrast=index) for index in range(n)])


def acceleration_of(mask: SamplingMask) -> float:
    """Total grid points divided by sampled points."""
    sampled = int(np.count_nonzero(mask.bits))
    if sampled == 0:
        raise InvalidParameterError("mask samples no k-space location")
    return mask.bits.size / sampled


def psf_sidelobe_ratio(mask: SamplingMask, exclude_radius: Optional[float] = None) -> float:
    """
    The psf_sidelobe_ratio function measures incoherence as the largest point-spread-function
    magnitude outside the main lobe relative to the main-lobe peak.

    :param mask: Sampling mask
    :type mask: SamplingMask
    :param exclude_radius: Main-lobe radius in image voxels, derived from the centre radius when None
    :type exclude_radius: float | None
    :return: Sidelobe-to-mainlobe ratio
    :rtype: float
    """
    grid = mask.grid
    if exclude_radius is None:
        exclude_radius = math.ceil(max(grid) / (2.0 * max(mask.center_radius, 1.0)))
    psf = np.abs(ifft2c(mask.bits.astype(np.complex128)))
    peak = psf[grid[0] // 2, grid[1] // 2]
    if peak == 0:
        raise InvalidParameterError("mask samples no k-space location")
    sidelobes = psf[kspace_radius(grid) > exclude_radius]
    return float(sidelobes.max() / peak) if sidelobes.size else 0.0


def scan_time_minutes(full_minutes: float, acceleration: float) -> float:
    """Acquisition time after undersampling by ``acceleration``."""
    if acceleration < 1:
        raise InvalidParameterError("acceleration must be at least 1")
    return full_minutes / acceleration
