"""Array-bearing domain types passed between the services"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.exceptions import InvalidParameterError, ShapeMismatchError
from src.schemas import HashGridConfig


@dataclass
class ContrastImageStack:
    data: np.ndarray
    ti: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3 or self.data.shape[0] < 1:
            raise ShapeMismatchError(f"image stack must be (N, Vy, Vz) with N >= 1, got {self.data.shape}")
        if self.ti is not None and len(self.ti) != self.data.shape[0]:
            raise ShapeMismatchError(f"{len(self.ti)} inversion times for {self.data.shape[0]} contrasts")
        if not np.all(np.isfinite(self.data)):
            raise InvalidParameterError("image stack contains non-finite entries")

    @property
    def n_contrasts(self) -> int:
        return self.data.shape[0]

    @property
    def grid(self) -> Tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]


@dataclass
class CoilSensitivities:
    maps: np.ndarray
    support: Optional[np.ndarray] = None

    def __post_init__(self):
        self.maps = np.asarray(self.maps)
        if self.maps.ndim != 3 or self.maps.shape[0] < 1:
            raise ShapeMismatchError(f"coil maps must be (C, Vy, Vz) with C >= 1, got {self.maps.shape}")

    @property
    def n_coils(self) -> int:
        return self.maps.shape[0]

    @property
    def grid(self) -> Tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]


@dataclass
class SamplingMask:
    bits: np.ndarray
    contrast: int = 0
    seed: Optional[int] = None
    center_radius: float = 0.0
    target_r: float = 1.0
    r0: Optional[float] = None
    alpha: float = 0.0

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise ShapeMismatchError(f"sampling mask must be 2D, got {self.bits.shape}")

    @property
    def grid(self) -> Tuple[int, int]:
        return self.bits.shape


@dataclass
class MaskSet:
    masks: List[SamplingMask] = field(default_factory=list)

    def __post_init__(self):
        if not self.masks:
            raise InvalidParameterError("a mask set needs at least one mask")
        grids = {mask.grid for mask in self.masks}
        radii = {mask.center_radius for mask in self.masks}
        if len(grids) != 1 or len(radii) != 1:
            raise ShapeMismatchError("all masks of a set must share grid and center radius")

    @property
    def bits(self) -> np.ndarray:
        return np.stack([mask.bits for mask in self.masks])

    @property
    def grid(self) -> Tuple[int, int]:
        return self.masks[0].grid

    @property
    def n_contrasts(self) -> int:
        return len(self.masks)

    @property
    def seeds(self) -> List[Optional[int]]:
        return [mask.seed for mask in self.masks]

    def union(self) -> np.ndarray:
        return np.any(self.bits, axis=0)

    def subset(self, contrast: int) -> "MaskSet":
        return MaskSet([self.masks[contrast]])

    def complement(self) -> "MaskSet":
        """Held-out locations: every grid point a mask did not sample."""
        return MaskSet([
            SamplingMask(~mask.bits, contrast=mask.contrast, seed=mask.seed, center_radius=mask.center_radius,
                         target_r=mask.target_r, r0=mask.r0, alpha=mask.alpha)
            for mask in self.masks
        ])


@dataclass
class KSpaceData:
    data: np.ndarray
    masks: MaskSet

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 4 or self.data.shape[0] < 1:
            raise ShapeMismatchError(f"k-space must be (C, N, Vy, Vz) with C >= 1, got {self.data.shape}")
        bits = self.masks.bits
        if self.data.shape[1:] != bits.shape:
            raise ShapeMismatchError(f"k-space {self.data.shape} does not match masks {bits.shape}")
        if np.any(self.data[:, ~bits]):
            raise InvalidParameterError("k-space holds nonzero samples outside the sampling mask")

    @property
    def n_coils(self) -> int:
        return self.data.shape[0]

    @property
    def n_contrasts(self) -> int:
        return self.data.shape[1]

    @property
    def grid(self) -> Tuple[int, int]:
        return self.data.shape[2], self.data.shape[3]


@dataclass
class DistanceWeights:
    w: np.ndarray

    @property
    def grid(self) -> Tuple[int, int]:
        return self.w.shape


@dataclass
class HashGridTables:
    features: np.ndarray
    config: HashGridConfig


@dataclass
class MlpParams:
    w0: np.ndarray
    b0: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    NAMES = ("w0", "b0", "w1", "b1", "w2", "b2")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.NAMES}

    @property
    def n_contrasts(self) -> int:
        return self.w2.shape[1] // 2


@dataclass
class InrModel:
    tables: HashGridTables
    mlp: MlpParams

    def parameters(self) -> dict:
        """Trainable arrays by name; the optimizer updates them in place."""
        return {"tables": self.tables.features, **self.mlp.as_dict()}


