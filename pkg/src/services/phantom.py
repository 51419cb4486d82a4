"""Digital multi-contrast brain phantom, coil sensitivities and acquisition noise"""

import math
from typing import List, Optional, Tuple

import numpy as np

from src.exceptions import DomainError, InvalidParameterError
from src.models import CoilSensitivities, ContrastImageStack, KSpaceData
from src.schemas import TISSUE_CODES, PhantomSpec, TissueLabel


def normalized_axes(grid: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """
    The normalized_axes function maps voxel centres to normalized coordinates in [-1, 1].

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :return: y coordinates of shape (Vy, 1) and z coordinates of shape (1, Vz)
    :rtype: tuple[np.ndarray, np.ndarray]
    """
    vy, vz = grid
    y = 2.0 * (np.arange(vy) + 0.5) / vy - 1.0
    z = 2.0 * (np.arange(vz) + 0.5) / vz - 1.0
    return y[:, None], z[None, :]


def render_tissue_map(spec: PhantomSpec) -> np.ndarray:
    """
    The render_tissue_map function paints the phantom ellipses onto the voxel grid.
    Each voxel receives the label of the last ellipse containing it (painter's order),
    voxels outside every ellipse stay background.

    :param spec: Validated phantom specification
    :type spec: PhantomSpec
    :return: Label image (Vy, Vz) holding the codes of TISSUE_CODES
    :rtype: np.ndarray
    """
    y, z = normalized_axes(spec.grid)
    labels = np.zeros(spec.grid, dtype=np.uint8)
    for ellipse in spec.ellipses:
        theta = math.radians(ellipse.rotation)
        dy = y - ellipse.center[0]
        dz = z - ellipse.center[1]
        u = dy * math.cos(theta) + dz * math.sin(theta)
        v = -dy * math.sin(theta) + dz * math.cos(theta)
        inside = (u / ellipse.axes[0]) ** 2 + (v / ellipse.axes[1]) ** 2 <= 1.0
        labels[inside] = TISSUE_CODES[ellipse.label]
    return labels


def phantom_support(label_map: np.ndarray) -> np.ndarray:
    return label_map != TISSUE_CODES[TissueLabel.BACKGROUND]


def ir_signal(m0, t1, ti):
    """
    The ir_signal function evaluates the signed ideal inversion-recovery signal
    m0 * (1 - 2 exp(-ti / t1)) with perfect inversion. Works on scalars and arrays.

    :param m0: Proton density (dimensionless)
    :param t1: Longitudinal relaxation time in ms, must be positive
    :param ti: Inversion time in ms, must be non-negative
    :return: Real-valued complex signal
    :rtype: complex | np.ndarray
    """
    t1 = np.asarray(t1, dtype=np.float64)
    ti = np.asarray(ti, dtype=np.float64)
    if np.any(t1 <= 0):
        raise DomainError("t1 must be positive")
    if np.any(ti < 0):
        raise DomainError("ti must be non-negative")
    value = np.asarray(m0, dtype=np.float64) * (1.0 - 2.0 * np.exp(-ti / t1))
    result = value.astype(np.complex128)
    return complex(result) if result.ndim == 0 else result


def null_time(t1: float) -> float:
    """TI in ms at which a tissue with this T1 crosses zero."""
    if t1 <= 0:
        raise DomainError("t1 must be positive")
    return t1 * math.log(2.0)


def synthesize_contrasts(spec: PhantomSpec, label_map: Optional[np.ndarray] = None) -> ContrastImageStack:
    """
    The synthesize_contrasts function builds one image per inversion time.
    Every voxel carries the IR signal of its tissue, so all contrasts share the anatomy.

    :param spec: Validated phantom specification
    :type spec: PhantomSpec
    :param label_map: Pre-rendered tissue map, rendered from spec when omitted
    :type label_map: np.ndarray | None
    :return: Complex128 stack (N, Vy, Vz)
    :rtype: ContrastImageStack
    """
    labels = render_tissue_map(spec) if label_map is None else label_map
    images = np.zeros((spec.n_contrasts, *spec.grid), dtype=np.complex128)
    for label, tissue in spec.tissues.items():
        if label is TissueLabel.BACKGROUND:
            continue
        region = labels == TISSUE_CODES[label]
        if not region.any():
            continue
        signal = ir_signal(tissue.m0, tissue.t1, np.asarray(spec.ti_schedule))
        images[:, region] = signal[:, None]
    return ContrastImageStack(images, ti=tuple(spec.ti_schedule))


def slice_specs(spec: PhantomSpec, n_slices: int, taper: float = 0.08) -> List[PhantomSpec]:
    """
    The slice_specs function stacks 2D slices into a volume whose ellipses shrink
    monotonically with slice index.

    :param spec: Phantom of the first slice
    :type spec: PhantomSpec
    :param n_slices: Number of slices
    :type n_slices: int
    :param taper: Relative axis shrink per slice
    :type taper: float
    :return: One phantom specification per slice
    :rtype: list[PhantomSpec]
    """
    if n_slices < 1:
        raise InvalidParameterError("n_slices must be at least 1")
    if not 0 <= taper * (n_slices - 1) < 1:
        raise InvalidParameterError("taper too large for the number of slices")
    specs = []
    for index in range(n_slices):
        scale = 1.0 - taper * index
        ellipses = [
            ellipse.model_copy(update={"axes": (ellipse.axes[0] * scale, ellipse.axes[1] * scale)})
            for ellipse in spec.ellipses
        ]
        specs.append(spec.model_copy(update={"ellipses": ellipses}))
    return specs


def synthesize_volume(specs: List[PhantomSpec]) -> Tuple[np.ndarray, np.ndarray]:
    """Ground-truth volume (S, N, Vy, Vz) and the union support (Vy, Vz) of all slices."""
    label_maps = [render_tissue_map(spec) for spec in specs]
    volume = np.stack([synthesize_contrasts(spec, labels).data for spec, labels in zip(specs, label_maps)])
    support = np.any([phantom_support(labels) for labels in label_maps], axis=0)
    return volume, support


def make_coil_maps(grid: Tuple[int, int], coils: int, smoothness: float = 1.0, seed: int = 0,
                   support: Optional[np.ndarray] = None) -> CoilSensitivities:
    """
    The make_coil_maps function simulates receiver coils as Gaussian lobes centred on the
    image border with a linear phase, normalized to sum(|S_c|^2) = 1 at every voxel.

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :param coils: Number of receiver coils C
    :type coils: int
    :param smoothness: Gaussian width in normalized units (the field of view spans 2)
    :type smoothness: float
    :param seed: Seed of the lobe placement and phase ramps
    :type seed: int
    :param support: Optional phantom support stored alongside the maps
    :type support: np.ndarray | None
    :return: Coil sensitivities (C, Vy, Vz)
    :rtype: CoilSensitivities
    """
    if coils < 1:
        raise InvalidParameterError("at least one coil is required")
    if smoothness <= 0:
        raise InvalidParameterError("smoothness must be positive")
    rng = np.random.default_rng(seed)
    y, z = normalized_axes(grid)
    angles = 2.0 * np.pi * (np.arange(coils) + rng.uniform(-0.25, 0.25, size=coils)) / coils
    slopes = rng.uniform(-np.pi / 4, np.pi / 4, size=(coils, 2))
    offsets = rng.uniform(-np.pi, np.pi, size=coils)
    maps = np.empty((coils, *grid), dtype=np.complex128)
    for c in range(coils):
        cy, cz = 1.2 * np.cos(angles[c]), 1.2 * np.sin(angles[c])
        magnitude = np.exp(-((y - cy) ** 2 + (z - cz) ** 2) / (2.0 * smoothness ** 2))
        phase = slopes[c, 0] * y + slopes[c, 1] * z + offsets[c]
        maps[c] = magnitude * np.exp(1j * phase)
    maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return CoilSensitivities(maps, support=support)


def coil_laplacian(coils: CoilSensitivities) -> float:
    """Largest magnitude of the 5-point finite-difference Laplacian over all coil maps, in grid units."""
    maps = coils.maps
    lap = (maps[:, :-2, 1:-1] + maps[:, 2:, 1:-1] + maps[:, 1:-1, :-2] + maps[:, 1:-1, 2:]
           - 4.0 * maps[:, 1:-1, 1:-1])
    return float(np.abs(lap).max())


def complex_noise(shape: Tuple[int, ...], sigma: float, seed: int = 0) -> np.ndarray:
    """Circular complex Gaussian samples, real and imaginary parts each with std sigma / sqrt(2)."""
    if sigma < 0:
        raise InvalidParameterError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (sigma / np.sqrt(2.0))


def add_noise(kspace: KSpaceData, sigma: float, seed: int = 0) -> KSpaceData:
    """
    The add_noise function adds circular complex Gaussian noise with E|e|^2 = sigma^2
    at the sampled locations only.

    :param kspace: Noiseless k-space
    :type kspace: KSpaceData
    :param sigma: Complex noise standard deviation
    :type sigma: float
    :param seed: Seed of the noise realization
    :type seed: int
    :return: Noisy k-space with the same masks
    :rtype: KSpaceData
    """
    if sigma < 0:
        raise InvalidParameterError("sigma must be non-negative")
    if sigma == 0:
        return KSpaceData(kspace.data.copy(), kspace.masks)
    noise = complex_noise(kspace.data.shape, sigma, seed)
    return KSpaceData(kspace.data + noise * kspace.masks.bits[None], kspace.masks)
