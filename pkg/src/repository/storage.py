"""Typed save and load of toolkit objects on top of the array container, plus readout decoupling of 3D k-space"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.exceptions import ContainerError, ShapeMismatchError
from src.models import CoilSensitivities, HashGridTables, InrModel, KSpaceData, MaskSet, MlpParams, SamplingMask
from src.repository.containers import read_container, write_container
from src.schemas import CheckpointMeta, MaskMeta, MaskSetMeta, StackMeta
from src.services.operators import fftc, ifftc

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _read_sidecar(path: PathLike, model):
    sidecar = sidecar_path(path)
    if not sidecar.is_file():
        raise ContainerError(f"metadata file {sidecar} does not exist")
    return model.model_validate_json(sidecar.read_text(encoding="utf-8"))


def save_images(path: PathLike, images: np.ndarray, ti: Optional[Sequence[float]] = None,
                dtype: str = "complex64") -> None:
    """
    The save_images function stores an image stack (N, Vy, Vz) or a volume (S, N, Vy, Vz)
    together with a JSON sidecar holding the inversion times.

    :param path: Container path
    :type path: str | Path
    :param images: Complex images
    :type images: np.ndarray
    :param ti: Inversion times in ms, one per contrast
    :type ti: Sequence[float] | None
    :param dtype: Storage dtype, complex64 or complex128
    :type dtype: str
    :return: None
    """
    write_container(path, np.asarray(images).astype(dtype))
    meta = StackMeta(kind="images", ti=list(ti) if ti is not None else None)
    sidecar_path(path).write_text(meta.model_dump_json(indent=2), encoding="utf-8")


def load_images(path: PathLike) -> Tuple[np.ndarray, StackMeta]:
    images = read_container(path)
    if not np.iscomplexobj(images):
        images = images.astype(np.complex128)
    sidecar = sidecar_path(path)
    meta = StackMeta.model_validate_json(sidecar.read_text(encoding="utf-8")) if sidecar.is_file() else StackMeta()
    return images, meta


def save_masks(path: PathLike, masks: MaskSet) -> None:
    """
    The save_masks function stores the mask bits bit-packed (N, Vy, Vz) and the per-mask seed,
    centre radius, target R and calibrated r0 in a JSON sidecar.

    :param path: Container path
    :type path: str | Path
    :param masks: Mask set
    :type masks: MaskSet
    :return: None
    """
    write_container(path, masks.bits)
    meta = MaskSetMeta(masks=[
        MaskMeta(contrast=mask.contrast, seed=mask.seed, center_radius=mask.center_radius, target_r=mask.target_r,
                 r0=mask.r0, alpha=mask.alpha)
        for mask in masks.masks
    ])
    sidecar_path(path).write_text(meta.model_dump_json(indent=2), encoding="utf-8")


def load_masks(path: PathLike) -> MaskSet:
    bits = read_container(path, expected="bool")
    if bits.ndim != 3:
        raise ShapeMismatchError(f"mask container must be (N, Vy, Vz), got {bits.shape}")
    sidecar = sidecar_path(path)
    if sidecar.is_file():
        meta = MaskSetMeta.model_validate_json(sidecar.read_text(encoding="utf-8"))
    else:
        meta = MaskSetMeta(masks=[MaskMeta(contrast=n) for n in range(bits.shape[0])])
    if len(meta.masks) != bits.shape[0]:
        raise ShapeMismatchError(f"{len(meta.masks)} mask records for {bits.shape[0]} masks")
    return MaskSet([SamplingMask(bits[n], **record.model_dump()) for n, record in enumerate(meta.masks)])


def save_coils(path: PathLike, coils: CoilSensitivities, dtype: str = "complex64") -> None:
    write_container(path, coils.maps.astype(dtype))


def load_coils(path: PathLike, support: Optional[np.ndarray] = None) -> CoilSensitivities:
    return CoilSensitivities(read_container(path).astype(np.complex128), support=support)


def save_kspace(path: PathLike, slices: Sequence[KSpaceData], dtype: str = "complex64") -> None:
    """Per-slice k-space stacked as (S, C, N, Vy, Vz); masks are stored separately."""
    write_container(path, np.stack([data.data for data in slices]).astype(dtype))


def load_kspace(path: PathLike, masks: MaskSet) -> List[KSpaceData]:
    """
    The load_kspace function reads per-slice k-space and pairs every slice with the masks.

    :param path: Container with (S, C, N, Vy, Vz) or (C, N, Vy, Vz) data
    :type path: str | Path
    :param masks: Masks the data were acquired with
    :type masks: MaskSet
    :return: One KSpaceData per slice
    :rtype: list[KSpaceData]
    """
    data = read_container(path).astype(np.complex128)
    if data.ndim == 4:
        data = data[None]
    if data.ndim != 5:
        raise ShapeMismatchError(f"k-space container must be (S, C, N, Vy, Vz), got {data.shape}")
    return [KSpaceData(data[s] * masks.bits[None], masks) for s in range(data.shape[0])]


def save_model(directory: PathLike, model: InrModel, scale: float = 1.0) -> None:
    """
    The save_model function writes one container per trainable array plus a JSON sidecar with
    the encoding configuration and the data scale.

    :param directory: Checkpoint directory
    :type directory: str | Path
    :param model: Model to store
    :type model: InrModel
    :param scale: Data scale the model was trained at
    :type scale: float
    :return: None
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, array in model.parameters().items():
        write_container(directory / f"{name}.mcir", array)
    meta = CheckpointMeta(encoding=model.tables.config, n_contrasts=model.mlp.n_contrasts,
                          hidden_width=model.mlp.w0.shape[1], param_dtype=str(model.mlp.w0.dtype), scale=scale)
    (directory / "model.json").write_text(meta.model_dump_json(indent=2), encoding="utf-8")


def load_model(directory: PathLike) -> Tuple[InrModel, CheckpointMeta]:
    directory = Path(directory)
    meta_file = directory / "model.json"
    if not meta_file.is_file():
        raise ContainerError(f"checkpoint metadata {meta_file} does not exist")
    meta = CheckpointMeta.model_validate_json(meta_file.read_text(encoding="utf-8"))
    tables = HashGridTables(read_container(directory / "tables.mcir", expected=meta.param_dtype), meta.encoding)
    mlp = MlpParams(*(read_container(directory / f"{name}.mcir", expected=meta.param_dtype) for name in MlpParams.NAMES))
    if mlp.n_contrasts != meta.n_contrasts or tables.features.shape[0] != meta.encoding.levels:
        raise ShapeMismatchError("checkpoint arrays do not match their metadata")
    return InrModel(tables, mlp), meta


def save_losses(path: PathLike, losses: Sequence[float]) -> None:
    write_container(path, np.asarray(losses, dtype=np.float64))


def load_losses(path: PathLike) -> np.ndarray:
    return read_container(path, expected="float64")


def decouple_readout(ksp3d: np.ndarray) -> np.ndarray:
    """
    The decouple_readout function applies a centred orthonormal inverse FFT along the readout
    axis kx (axis 0), turning 3D k-space into independent 2D k-space per slice.

    :param ksp3d: Complex k-space (Vx, ...) with at least the two phase-encoding axes after kx
    :type ksp3d: np.ndarray
    :return: Per-slice k-space indexed by slice along axis 0
    :rtype: np.ndarray
    """
    ksp3d = np.asarray(ksp3d)
    if ksp3d.ndim < 3:
        raise ShapeMismatchError(f"3D k-space needs at least 3 axes, got {ksp3d.shape}")
    return ifftc(ksp3d, (0,))


def recompose_readout(slices: np.ndarray) -> np.ndarray:
    """Inverse of decouple_readout: centred orthonormal FFT along axis 0."""
    slices = np.asarray(slices)
    if slices.ndim < 3:
        raise ShapeMismatchError(f"slice stack needs at least 3 axes, got {slices.shape}")
    return fftc(slices, (0,))
