"""PNG export of image montages, sampling masks and orthogonal views"""

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.exceptions import InvalidParameterError, ShapeMismatchError  # noqa: E402
from src.models import MaskSet  # noqa: E402
from src.schemas import MetricParams  # noqa: E402
from src.services.metrics import joint_percentile_normalize  # noqa: E402

PathLike = Union[str, Path]


def _grid_shape(count: int, columns: int):
    columns = max(1, min(columns, count))
    return (count + columns - 1) // columns, columns


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, bbox_inches="tight")
    plt.close(fig)
    return path


def windowed(stacks: Sequence[np.ndarray], mask: Optional[np.ndarray] = None,
             params: Optional[MetricParams] = None) -> list:
    """Magnitudes windowed by one joint percentile normalization, so montages share a grey scale."""
    params = params or MetricParams()
    return joint_percentile_normalize(stacks, mask, params.p_lo, params.p_hi)


def save_montage(images: np.ndarray, path: PathLike, ti: Optional[Sequence[float]] = None, title: str = "",
                 columns: int = 5) -> Path:
    """
    The save_montage function draws one panel per contrast, titled with its inversion time.

    :param images: Magnitudes in [0, 1], shape (N, Vy, Vz)
    :type images: np.ndarray
    :param path: PNG destination
    :type path: str | Path
    :param ti: Inversion times in ms
    :type ti: Sequence[float] | None
    :param title: Figure title, usually the method name
    :type title: str
    :param columns: Panels per row
    :type columns: int
    :return: The written path
    :rtype: Path
    """
    images = np.asarray(images)
    if images.ndim != 3:
        raise ShapeMismatchError(f"montage needs (N, Vy, Vz) images, got {images.shape}")
    if ti is not None and len(ti) != images.shape[0]:
        raise ShapeMismatchError(f"{len(ti)} inversion times for {images.shape[0]} contrasts")
    rows, cols = _grid_shape(images.shape[0], columns)
    fig, axes = plt.subplots(rows, cols, figsize=(2.2 * cols, 2.2 * rows + 0.4), squeeze=False)
    for index, ax in enumerate(axes.flat):
        ax.axis("off")
        if index < images.shape[0]:
            ax.imshow(images[index], cmap="gray", vmin=0.0, vmax=1.0)
            ax.set_title(f"TI={ti[index]:.0f} ms" if ti is not None else f"contrast {index}", fontsize=8)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def save_mask_montage(masks: MaskSet, path: PathLike, columns: int = 5) -> Path:
    """Sampling masks side by side, one panel per contrast with its seed and achieved R."""
    bits = masks.bits
    rows, cols = _grid_shape(bits.shape[0], columns)
    fig, axes = plt.subplots(rows, cols, figsize=(2.2 * cols, 2.2 * rows), squeeze=False)
    for index, ax in enumerate(axes.flat):
        ax.axis("off")
        if index < bits.shape[0]:
            ax.imshow(bits[index], cmap="gray", vmin=0, vmax=1, interpolation="nearest")
            achieved = bits[index].size / max(int(bits[index].sum()), 1)
            ax.set_title(f"seed={masks.masks[index].seed} R={achieved:.1f}", fontsize=8)
    return _save(fig, path)


def save_orthogonal_views(volume: np.ndarray, path: PathLike, contrast: int = 0, title: str = "") -> Path:
    """
    The save_orthogonal_views function shows an axial, a coronal and a sagittal cut of one contrast
    of a slice stack (S, N, Vy, Vz) with values in [0, 1].

    :param volume: Windowed magnitudes
    :type volume: np.ndarray
    :param path: PNG destination
    :type path: str | Path
    :param contrast: Contrast to show
    :type contrast: int
    :param title: Figure title
    :type title: str
    :return: The written path
    :rtype: Path
    """
    volume = np.asarray(volume)
    if volume.ndim != 4:
        raise ShapeMismatchError(f"orthogonal views need (S, N, Vy, Vz), got {volume.shape}")
    if not 0 <= contrast < volume.shape[1]:
        raise InvalidParameterError(f"contrast {contrast} outside [0, {volume.shape[1]})")
    n_slices, _, vy, vz = volume.shape
    cuts = {
        "axial": volume[n_slices // 2, contrast],
        "coronal": volume[:, contrast, vy // 2, :],
        "sagittal": volume[:, contrast, :, vz // 2],
    }
    fig, axes = plt.subplots(1, 3, figsize=(7.5, 2.8))
    for ax, (name, cut) in zip(axes, cuts.items()):
        ax.imshow(cut, cmap="gray", vmin=0.0, vmax=1.0, aspect="auto")
        ax.set_title(name, fontsize=9)
        ax.axis("off")
    if title:
        fig.suptitle(title)
    return _save(fig, path)
