"""Measurement physics: centred FFTs, coil projection, masking, distance weights and the weighted k-space loss"""

from typing import Tuple

import numpy as np
from scipy import fft

from src.exceptions import ShapeMismatchError
from src.models import CoilSensitivities, ContrastImageStack, DistanceWeights, KSpaceData, MaskSet


def fftc(x: np.ndarray, axes: Tuple[int, ...]) -> np.ndarray:
    """Centred orthonormal forward FFT over ``axes``."""
    return fft.fftshift(fft.fftn(fft.ifftshift(x, axes=axes), axes=axes, norm="ortho"), axes=axes)


def ifftc(x: np.ndarray, axes: Tuple[int, ...]) -> np.ndarray:
    """Centred orthonormal inverse FFT over ``axes``."""
    return fft.fftshift(fft.ifftn(fft.ifftshift(x, axes=axes), axes=axes, norm="ortho"), axes=axes)


def fft2c(img: np.ndarray) -> np.ndarray:
    """
    The fft2c function applies the centred unitary 2D Fourier transform over the last two axes.
    The DC sample sits at index (Vy // 2, Vz // 2).

    :param img: Complex array (..., Vy, Vz)
    :type img: np.ndarray
    :return: k-space of the same shape
    :rtype: np.ndarray
    """
    img = np.asarray(img)
    if img.ndim < 2:
        raise ShapeMismatchError(f"fft2c needs at least 2 dimensions, got {img.shape}")
    return fftc(img, (-2, -1))


def ifft2c(ksp: np.ndarray) -> np.ndarray:
    """
    The ifft2c function is the inverse of fft2c over the last two axes.

    :param ksp: Complex k-space (..., Vy, Vz)
    :type ksp: np.ndarray
    :return: Image of the same shape
    :rtype: np.ndarray
    """
    ksp = np.asarray(ksp)
    if ksp.ndim < 2:
        raise ShapeMismatchError(f"ifft2c needs at least 2 dimensions, got {ksp.shape}")
    return ifftc(ksp, (-2, -1))


def centered_indices(n: int) -> np.ndarray:
    """Integer frequency indices matching the fft2c centring, e.g. -80..79 for n = 160."""
    return np.arange(n) - n // 2


def kspace_radius(grid: Tuple[int, int]) -> np.ndarray:
    ky = centered_indices(grid[0])
    kz = centered_indices(grid[1])
    return np.hypot(ky[:, None], kz[None, :])


def distance_weights(grid: Tuple[int, int]) -> DistanceWeights:
    """
    The distance_weights function returns W(ky, kz) = sqrt(ky^2 + kz^2) + 1 on centred
    integer frequency indices, so the DC sample has weight exactly 1.

    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :return: Real weights (Vy, Vz), all >= 1
    :rtype: DistanceWeights
    """
    return DistanceWeights(kspace_radius(grid) + 1.0)


def _check_shapes(d: ContrastImageStack, coils: CoilSensitivities, masks: MaskSet) -> None:
    if coils.grid != d.grid or masks.grid != d.grid:
        raise ShapeMismatchError(f"grids differ: images {d.grid}, coils {coils.grid}, masks {masks.grid}")
    if masks.n_contrasts != d.n_contrasts:
        raise ShapeMismatchError(f"{masks.n_contrasts} masks for {d.n_contrasts} contrasts")


def _check_kspace(ksp: KSpaceData, coils: CoilSensitivities, masks: MaskSet) -> None:
    if ksp.n_coils != coils.n_coils:
        raise ShapeMismatchError(f"{ksp.n_coils} k-space coils for {coils.n_coils} coil maps")
    if ksp.grid != coils.grid or ksp.grid != masks.grid or ksp.n_contrasts != masks.n_contrasts:
        raise ShapeMismatchError("k-space, coil maps and masks disagree in shape")


def forward_model(d: ContrastImageStack, coils: CoilSensitivities, masks: MaskSet) -> KSpaceData:
    """
    The forward_model function simulates the acquisition mask_n * F(S_c * d_n) for every coil c
    and contrast n. Noise is added separately.

    :param d: Image stack (N, Vy, Vz)
    :type d: ContrastImageStack
    :param coils: Sensitivities (C, Vy, Vz)
    :type coils: CoilSensitivities
    :param masks: One mask per contrast
    :type masks: MaskSet
    :return: Masked k-space (C, N, Vy, Vz)
    :rtype: KSpaceData
    """
    _check_shapes(d, coils, masks)
    bits = masks.bits
    ksp = fft2c(coils.maps[:, None] * d.data[None]) * bits[None]
    return KSpaceData(ksp, masks)


def adjoint_model(ksp: KSpaceData, coils: CoilSensitivities, masks: MaskSet) -> ContrastImageStack:
    """
    The adjoint_model function applies sum_c conj(S_c) * iF(mask_n * D_{c,n}).
    With undersampled data this is the zero-filled reconstruction, with full masks it is
    the coil-combined inverse FFT reference.

    :param ksp: k-space (C, N, Vy, Vz)
    :type ksp: KSpaceData
    :param coils: Sensitivities (C, Vy, Vz)
    :type coils: CoilSensitivities
    :param masks: One mask per contrast
    :type masks: MaskSet
    :return: Image stack (N, Vy, Vz)
    :rtype: ContrastImageStack
    """
    _check_kspace(ksp, coils, masks)
    images = ifft2c(ksp.data * masks.bits[None])
    return ContrastImageStack(np.sum(np.conj(coils.maps)[:, None] * images, axis=0))


def coil_combine_reference(full: KSpaceData, coils: CoilSensitivities) -> ContrastImageStack:
    """Inverse FFT with coil maps of fully sampled data."""
    return adjoint_model(full, coils, full.masks)


def _weighted_residual(d, coils, masks, target, weights):
    _check_shapes(d, coils, masks)
    _check_kspace(target, coils, masks)
    if weights.grid != d.grid:
        raise ShapeMismatchError(f"weights {weights.grid} do not match grid {d.grid}")
    bits = masks.bits[None]
    predicted = fft2c(coils.maps[:, None] * d.data[None]) * bits
    return (predicted - target.data) * bits


def weighted_loss(d: ContrastImageStack, coils: CoilSensitivities, masks: MaskSet, target: KSpaceData,
                  weights: DistanceWeights) -> float:
    """
    The weighted_loss function sums |W * (M F S_c d - D_c)|^2 over coils, contrasts and
    sampled locations.

    :param d: Image stack (N, Vy, Vz)
    :type d: ContrastImageStack
    :param coils: Sensitivities (C, Vy, Vz)
    :type coils: CoilSensitivities
    :param masks: One mask per contrast
    :type masks: MaskSet
    :param target: Acquired k-space, zero off the masks
    :type target: KSpaceData
    :param weights: Distance weights
    :type weights: DistanceWeights
    :return: Non-negative loss
    :rtype: float
    """
    residual = _weighted_residual(d, coils, masks, target, weights)
    return float(np.sum(np.abs(weights.w * residual) ** 2))


def loss_grad_images(d: ContrastImageStack, coils: CoilSensitivities, masks: MaskSet, target: KSpaceData,
                     weights: DistanceWeights) -> ContrastImageStack:
    """
    The loss_grad_images function returns 2 * sum_c conj(S_c) iF(W^2 M (M F S_c d - D_c)),
    that is twice the Wirtinger cogradient dL/dconj(d). Its real and imaginary parts are the
    partial derivatives of the loss with respect to Re(d) and Im(d).

    :param d: Image stack (N, Vy, Vz)
    :type d: ContrastImageStack
    :param coils: Sensitivities (C, Vy, Vz)
    :type coils: CoilSensitivities
    :param masks: One mask per contrast
    :type masks: MaskSet
    :param target: Acquired k-space
    :type target: KSpaceData
    :param weights: Distance weights
    :type weights: DistanceWeights
    :return: Gradient stack (N, Vy, Vz)
    :rtype: ContrastImageStack
    """
    residual = _weighted_residual(d, coils, masks, target, weights)
    back = ifft2c(weights.w ** 2 * residual)
    return ContrastImageStack(2.0 * np.sum(np.conj(coils.maps)[:, None] * back, axis=0))


def heldout_loss(d: ContrastImageStack, coils: CoilSensitivities, masks: MaskSet, full: KSpaceData,
                 weights: DistanceWeights) -> float:
    """
    The heldout_loss function evaluates the weighted loss on the k-space locations the masks
    did not acquire, against fully sampled noiseless data.

    :param d: Image stack (N, Vy, Vz)
    :type d: ContrastImageStack
    :param coils: Sensitivities
    :type coils: CoilSensitivities
    :param masks: Acquisition masks
    :type masks: MaskSet
    :param full: Fully sampled k-space (C, N, Vy, Vz)
    :type full: KSpaceData
    :param weights: Distance weights
    :type weights: DistanceWeights
    :return: Loss over held-out locations
    :rtype: float
    """
    heldout = masks.complement()
    target = KSpaceData(full.data * heldout.bits[None], heldout)
    return weighted_loss(d, coils, heldout, target, weights)
