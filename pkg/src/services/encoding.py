"""Multiresolution hash-grid encoding of 2D coordinates with its exact backward pass"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.conf.config import settings
from src.exceptions import InvalidParameterError, ShapeMismatchError
from src.models import HashGridTables
from src.schemas import HashGridConfig

logger = logging.getLogger(__name__)

# spatial hash primes per axis
PRIMES = (np.uint64(1), np.uint64(2654435761))


def is_dense(resolution: int, table_size: int) -> bool:
    return resolution * resolution <= table_size


def level_indices(iy: np.ndarray, iz: np.ndarray, resolution: int, table_size: int) -> np.ndarray:
    """
    The level_indices function maps integer grid corners to table rows: row-major when the
    level's full vertex grid fits into the table, spatial hash otherwise.

    :param iy: Corner indices along y
    :type iy: np.ndarray
    :param iz: Corner indices along z
    :type iz: np.ndarray
    :param resolution: Vertices per axis at this level
    :type resolution: int
    :param table_size: Table size T, a power of two
    :type table_size: int
    :return: Table rows in [0, T)
    :rtype: np.ndarray
    """
    iy = np.asarray(iy, dtype=np.int64)
    iz = np.asarray(iz, dtype=np.int64)
    if is_dense(resolution, table_size):
        return iy * resolution + iz
    hashed = (iy.astype(np.uint64) * PRIMES[0]) ^ (iz.astype(np.uint64) * PRIMES[1])
    return (hashed & np.uint64(table_size - 1)).astype(np.int64)


def hash_index(level: int, corner: Tuple[int, int], config: HashGridConfig) -> int:
    """Table row of one integer corner (iy, iz) at ``level``."""
    if not 0 <= level < config.levels:
        raise InvalidParameterError(f"level {level} outside [0, {config.levels})")
    resolution = config.resolutions()[level]
    return int(level_indices(np.array([corner[0]]), np.array([corner[1]]), resolution, config.table_size)[0])


@dataclass
class EncodingPlan:
    """Corner rows and bilinear weights of a fixed coordinate batch, shape (L, B, 4) each."""
    indices: np.ndarray
    weights: np.ndarray
    resolutions: List[int]
    clamped: int = 0

    @property
    def batch(self) -> int:
        return self.indices.shape[1]


def prepare_encoding(coords: np.ndarray, config: HashGridConfig) -> EncodingPlan:
    """
    The prepare_encoding function locates every coordinate in the grid of every level.
    Coordinates outside [0, 1]^2 are clamped onto the boundary.

    :param coords: Batch of (y, z) coordinates, shape (B, 2)
    :type coords: np.ndarray
    :param config: Encoding configuration with a finest resolution
    :type config: HashGridConfig
    :return: Corner rows and bilinear weights per level
    :rtype: EncodingPlan
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ShapeMismatchError(f"coordinates must be (B, 2), got {coords.shape}")
    outside = np.any((coords < 0.0) | (coords > 1.0), axis=1)
    clamped = int(outside.sum())
    if clamped and settings.debug:
        logger.warning(f"clamped={clamped} batch={coords.shape[0]} coordinates outside the unit square")
    coords = np.clip(coords, 0.0, 1.0)

    resolutions = config.resolutions()
    indices = np.empty((config.levels, coords.shape[0], 4), dtype=np.int64)
    weights = np.empty((config.levels, coords.shape[0], 4), dtype=np.float64)
    for level, resolution in enumerate(resolutions):
        scaled = coords * (resolution - 1)
        base = np.clip(np.floor(scaled).astype(np.int64), 0, resolution - 2)
        fy, fz = (scaled - base).T
        y0, z0 = base.T
        for slot, (dy, dz) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            indices[level, :, slot] = level_indices(y0 + dy, z0 + dz, resolution, config.table_size)
        weights[level, :, 0] = (1 - fy) * (1 - fz)
        weights[level, :, 1] = (1 - fy) * fz
        weights[level, :, 2] = fy * (1 - fz)
        weights[level, :, 3] = fy * fz
    return EncodingPlan(indices, weights, resolutions, clamped)


def init_tables(config: HashGridConfig, rng: np.random.Generator, dtype: str = "float32") -> HashGridTables:
    """Feature tables (L, T, F) drawn uniformly from [-1e-4, 1e-4]."""
    features = rng.uniform(-1e-4, 1e-4, size=(config.levels, config.table_size, config.features))
    return HashGridTables(features.astype(dtype), config)


def _plan_for(coords, tables: HashGridTables, plan):
    if plan is None:
        return prepare_encoding(coords, tables.config)
    if plan.indices.shape[0] != tables.config.levels:
        raise ShapeMismatchError("encoding plan and tables disagree in level count")
    return plan


def encode(coords: np.ndarray, tables: HashGridTables, plan: EncodingPlan = None) -> np.ndarray:
    """
    The encode function interpolates the four corner features of every level bilinearly and
    concatenates the levels, coarse first.

    :param coords: Batch of (y, z) coordinates in [0, 1]^2, shape (B, 2)
    :type coords: np.ndarray
    :param tables: Trainable feature tables
    :type tables: HashGridTables
    :param plan: Precomputed corner rows and weights for ``coords``
    :type plan: EncodingPlan | None
    :return: Features of shape (B, L * F), float64
    :rtype: np.ndarray
    """
    plan = _plan_for(coords, tables, plan)
    levels = np.arange(tables.config.levels)[:, None, None]
    corners = tables.features[levels, plan.indices]
    features = np.einsum("lbc,lbcf->blf", plan.weights, corners.astype(np.float64))
    return features.reshape(plan.batch, -1)


def encode_backward(coords: np.ndarray, upstream: np.ndarray, tables: HashGridTables,
                    plan: EncodingPlan = None) -> np.ndarray:
    """
    The encode_backward function scatters the upstream feature gradient onto the touched
    table rows with the bilinear weights. Hash collisions accumulate additively.

    :param coords: Batch of (y, z) coordinates, shape (B, 2)
    :type coords: np.ndarray
    :param upstream: Gradient with respect to the encoded features, shape (B, L * F)
    :type upstream: np.ndarray
    :param tables: Feature tables the features were read from
    :type tables: HashGridTables
    :param plan: Precomputed corner rows and weights for ``coords``
    :type plan: EncodingPlan | None
    :return: Dense table gradient (L, T, F), float64
    :rtype: np.ndarray
    """
    plan = _plan_for(coords, tables, plan)
    n_levels, table_size, n_features = tables.features.shape
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (plan.batch, n_levels * n_features):
        raise ShapeMismatchError(f"upstream gradient {upstream.shape} does not match ({plan.batch}, {n_levels * n_features})")
    per_level = upstream.reshape(plan.batch, n_levels, n_features).transpose(1, 0, 2)
    rows = (plan.indices + table_size * np.arange(n_levels)[:, None, None]).ravel()
    grad = np.empty((n_levels * table_size, n_features), dtype=np.float64)
    for f in range(n_features):
        contributions = plan.weights * per_level[:, :, None, f]
        # fixed accumulation order
        grad[:, f] = np.bincount(rows, weights=contributions.ravel(), minlength=n_levels * table_size)
    return grad.reshape(n_levels, table_size, n_features)
