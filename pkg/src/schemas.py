"""Validation schemas"""

import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class TissueLabel(str, Enum):
    WM = "WM"
    GM = "GM"
    CSF = "CSF"
    BACKGROUND = "background"


TISSUE_CODES = {
    TissueLabel.BACKGROUND: 0,
    TissueLabel.WM: 1,
    TissueLabel.GM: 2,
    TissueLabel.CSF: 3,
}

# TI_1 = 26 ms, spacing 249.05 ms, 10 inversion times
DEFAULT_TI_SCHEDULE = [26.0 + 249.05 * n for n in range(10)]


class TissueClass(BaseModel):
    label: TissueLabel
    t1: Optional[float] = None
    m0: float = Field(ge=0)

    @model_validator(mode="after")
    def check_relaxation(self) -> "TissueClass":
        if self.label is TissueLabel.BACKGROUND:
            if self.m0 != 0:
                raise ValueError("background tissue must have m0 = 0")
        elif self.t1 is None or self.t1 <= 0:
            raise ValueError(f"tissue {self.label.value} needs t1 > 0")
        return self


def default_tissue_table() -> Dict[TissueLabel, TissueClass]:
    """
    The default_tissue_table function returns literature T1 values at 3T together with
    relative proton densities for white matter, gray matter and CSF.

    :return: Map label -> TissueClass, background included
    :rtype: dict[TissueLabel, TissueClass]
    """
    return {
        TissueLabel.WM: TissueClass(label=TissueLabel.WM, t1=850.0, m0=0.69),
        TissueLabel.GM: TissueClass(label=TissueLabel.GM, t1=1350.0, m0=0.8),
        TissueLabel.CSF: TissueClass(label=TissueLabel.CSF, t1=4200.0, m0=1.0),
        TissueLabel.BACKGROUND: TissueClass(label=TissueLabel.BACKGROUND, m0=0.0),
    }


class Ellipse(BaseModel):
    # normalized coordinates, the field of view spans [-1, 1] on both axes
    center: Tuple[float, float]
    axes: Tuple[float, float]
    rotation: float = 0.0
    label: TissueLabel

    @field_validator("axes")
    @classmethod
    def positive_axes(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if min(value) <= 0:
            raise ValueError("ellipse axes must be positive")
        return value


# painter's order: later ellipses overwrite earlier ones
DEFAULT_BRAIN_ELLIPSES = [
    Ellipse(center=(0.0, 0.0), axes=(0.80, 0.64), label=TissueLabel.CSF),
    Ellipse(center=(0.0, 0.0), axes=(0.74, 0.58), label=TissueLabel.GM),
    Ellipse(center=(0.02, 0.0), axes=(0.58, 0.44), label=TissueLabel.WM),
    Ellipse(center=(0.08, 0.2), axes=(0.14, 0.07), rotation=15.0, label=TissueLabel.GM),
    Ellipse(center=(0.08, -0.2), axes=(0.14, 0.07), rotation=-15.0, label=TissueLabel.GM),
    Ellipse(center=(-0.06, 0.09), axes=(0.22, 0.05), rotation=20.0, label=TissueLabel.CSF),
    Ellipse(center=(-0.06, -0.09), axes=(0.22, 0.05), rotation=-20.0, label=TissueLabel.CSF),
]


class PhantomSpec(BaseModel):
    grid: Tuple[int, int]
    ellipses: List[Ellipse] = Field(default_factory=list)
    tissues: Dict[TissueLabel, TissueClass] = Field(default_factory=default_tissue_table)
    ti_schedule: List[float] = Field(default_factory=lambda: list(DEFAULT_TI_SCHEDULE))

    @field_validator("grid")
    @classmethod
    def grid_large_enough(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if min(value) < 8:
            raise ValueError("grid dimensions must be at least 8")
        return value

    @field_validator("ti_schedule")
    @classmethod
    def strictly_increasing(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("ti_schedule needs at least one inversion time")
        if value[0] < 0:
            raise ValueError("inversion times must be non-negative")
        if any(later <= earlier for earlier, later in zip(value, value[1:])):
            raise ValueError("ti_schedule must be strictly increasing")
        return value

    @model_validator(mode="after")
    def labels_known(self) -> "PhantomSpec":
        for key, tissue in self.tissues.items():
            if key is not tissue.label:
                raise ValueError(f"tissue table key {key.value} holds label {tissue.label.value}")
        for ellipse in self.ellipses:
            if ellipse.label not in self.tissues:
                raise ValueError(f"ellipse label {ellipse.label.value} missing from tissue table")
        return self

    @property
    def n_contrasts(self) -> int:
        return len(self.ti_schedule)

    @classmethod
    def default_brain(cls, grid: Tuple[int, int] = (64, 64), ti_schedule: Optional[List[float]] = None) -> "PhantomSpec":
        """
        The default_brain function builds the three-tissue brain phantom used by the demo runs.

        :param grid: Voxel counts (Vy, Vz)
        :type grid: tuple[int, int]
        :param ti_schedule: Inversion times in ms, defaults to the 10-TI schedule
        :type ti_schedule: list[float] | None
        :return: A validated phantom specification
        :rtype: PhantomSpec
        """
        return cls(
            grid=grid,
            ellipses=[ellipse.model_copy() for ellipse in DEFAULT_BRAIN_ELLIPSES],
            ti_schedule=list(ti_schedule if ti_schedule is not None else DEFAULT_TI_SCHEDULE),
        )


class CoilParams(BaseModel):
    coils: int = Field(default=4, ge=1)
    smoothness: float = Field(default=1.0, gt=0)
    laplacian_bound: float = Field(default=0.1, gt=0)


class MaskParams(BaseModel):
    acceleration: float = Field(default=8.0, ge=1)
    center_radius: Optional[float] = Field(default=None, ge=0)
    alpha: float = Field(default=2.5, ge=0)
    tolerance: float = Field(default=0.05, gt=0, lt=1)
    max_iterations: int = Field(default=40, ge=1)
    psf_sidelobe_threshold: float = Field(default=0.35, gt=0)


class NoiseParams(BaseModel):
    # noise std relative to the largest k-space magnitude
    relative_sigma: float = Field(default=0.005, ge=0)


class HashGridConfig(BaseModel):
    levels: int = Field(default=4, ge=1)
    features: int = Field(default=2, ge=1)
    table_size: int = Field(default=2 ** 16, ge=1)
    base_resolution: int = Field(default=16, ge=2)
    finest_resolution: Optional[int] = Field(default=None, ge=2)

    @field_validator("table_size")
    @classmethod
    def power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("table_size must be a power of two")
        return value

    @model_validator(mode="after")
    def ordered_resolutions(self) -> "HashGridConfig":
        if self.finest_resolution is not None and self.finest_resolution < self.base_resolution:
            raise ValueError("finest_resolution must not be smaller than base_resolution")
        return self

    def resolved(self, grid: Tuple[int, int]) -> "HashGridConfig":
        """
        The resolved function fills in the finest resolution as half the larger grid dimension,
        never below the base resolution, when the configuration leaves it open.

        :param grid: Voxel counts (Vy, Vz)
        :type grid: tuple[int, int]
        :return: A configuration with finest_resolution set
        :rtype: HashGridConfig
        """
        if self.finest_resolution is not None:
            return self
        return self.model_copy(update={"finest_resolution": max(max(grid) // 2, self.base_resolution)})

    @property
    def growth(self) -> float:
        finest = self.finest_resolution or self.base_resolution
        if self.levels == 1:
            return 1.0
        return math.exp((math.log(finest) - math.log(self.base_resolution)) / (self.levels - 1))

    def resolutions(self) -> List[int]:
        """
        The resolutions function lists the number of grid vertices per axis for every level.

        :return: One vertex count per level, coarse to fine
        :rtype: list[int]
        """
        growth = self.growth
        return [max(2, int(math.floor(self.base_resolution * growth ** level + 1e-9))) for level in range(self.levels)]


class TrainConfig(BaseModel):
    epochs: int = Field(default=300, ge=1)
    lr_tables: float = Field(default=1e-2, gt=0)
    lr_mlp: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.99, ge=0, lt=1)
    eps: float = Field(default=1e-15, gt=0)
    seed: int = Field(default=0, ge=0)
    hidden_width: int = Field(default=64, ge=1)
    param_dtype: Literal["float32", "float64"] = "float32"
    normalize: bool = True
    log_every: int = Field(default=50, ge=1)
    restart_lr_factor: float = Field(default=0.1, gt=0, le=1)
    encoding: HashGridConfig = Field(default_factory=HashGridConfig)


class MetricParams(BaseModel):
    p_lo: float = Field(default=1.0, ge=0, le=100)
    p_hi: float = Field(default=99.0, ge=0, le=100)

    @model_validator(mode="after")
    def ordered_percentiles(self) -> "MetricParams":
        if self.p_lo >= self.p_hi:
            raise ValueError("p_lo must be smaller than p_hi")
        return self


class PipelineConfig(BaseModel):
    grid: Tuple[int, int] = (64, 64)
    phantom: Optional[PhantomSpec] = None
    slices: int = Field(default=1, ge=1)
    slice_taper: float = Field(default=0.08, ge=0, lt=1)
    coils: CoilParams = Field(default_factory=CoilParams)
    masks: MaskParams = Field(default_factory=MaskParams)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    train: TrainConfig = Field(default_factory=TrainConfig)
    metrics: MetricParams = Field(default_factory=MetricParams)
    seed: int = Field(default=0, ge=0)
    storage_dtype: Literal["complex64", "complex128"] = "complex64"
    ti_schedule: Optional[List[float]] = None
    sweep_accelerations: List[float] = Field(default_factory=lambda: [4.0, 8.0, 12.0])
    # fully sampled acquisition time of the volume, scaled by 1/R in sweep tables
    full_scan_minutes: float = Field(default=13.47, gt=0)
    out_dir: str = "runs/demo"

    @model_validator(mode="after")
    def consistent_grid(self) -> "PipelineConfig":
        if self.phantom is not None and tuple(self.phantom.grid) != tuple(self.grid):
            raise ValueError("phantom.grid must equal grid")
        if min(self.grid) < 8:
            raise ValueError("grid dimensions must be at least 8")
        if self.masks.center_radius is not None and self.masks.center_radius >= min(self.grid) / 2:
            raise ValueError("masks.center_radius must be smaller than half the smallest grid dimension")
        if any(value < 1 for value in self.sweep_accelerations):
            raise ValueError("sweep accelerations must be >= 1")
        return self

    def phantom_spec(self) -> PhantomSpec:
        if self.phantom is not None:
            return self.phantom
        return PhantomSpec.default_brain(tuple(self.grid), self.ti_schedule)

    @property
    def mask_seed(self) -> int:
        return self.seed

    @property
    def coil_seed(self) -> int:
        return self.seed + 1

    @property
    def noise_seed(self) -> int:
        return self.seed + 2

    @property
    def train_seed(self) -> int:
        return self.seed + 3


class StackMeta(BaseModel):
    kind: Literal["images", "kspace", "coils"] = "images"
    ti: Optional[List[float]] = None


class MaskMeta(BaseModel):
    contrast: int = 0
    seed: Optional[int] = None
    center_radius: float = 0.0
    target_r: float = 1.0
    r0: Optional[float] = None
    alpha: float = 0.0


class MaskSetMeta(BaseModel):
    masks: List[MaskMeta]


class CheckpointMeta(BaseModel):
    encoding: HashGridConfig
    n_contrasts: int = Field(ge=1)
    hidden_width: int = Field(ge=1)
    param_dtype: Literal["float32", "float64"] = "float32"
    scale: float = 1.0


PsnrValue = Union[float, Literal["identical"]]


class MetricReport(BaseModel):
    method: str
    acceleration: float
    ssim: List[List[float]]
    psnr: List[List[PsnrValue]]
    ssim_mean: float
    ssim_std: float
    ssim_std_slices: float
    ssim_std_contrasts: float
    psnr_mean: PsnrValue
    psnr_std: float
    psnr_std_slices: float
    psnr_std_contrasts: float
    identical_count: int = 0

    def to_lines(self) -> List[str]:
        """
        The to_lines function renders the report as machine-parsable key=value lines.

        :return: One line per aggregate plus one per (slice, contrast) pair
        :rtype: list[str]
        """
        prefix = f"method={self.method} R={self.acceleration:g}"
        psnr_mean = self.psnr_mean if isinstance(self.psnr_mean, str) else f"{self.psnr_mean:.6f}"
        lines = [
            f"{prefix} ssim_mean={self.ssim_mean:.6f} ssim_std={self.ssim_std:.6f} "
            f"ssim_std_slices={self.ssim_std_slices:.6f} ssim_std_contrasts={self.ssim_std_contrasts:.6f}",
            f"{prefix} psnr_mean={psnr_mean} psnr_std={self.psnr_std:.6f} "
            f"psnr_std_slices={self.psnr_std_slices:.6f} psnr_std_contrasts={self.psnr_std_contrasts:.6f} "
            f"identical={self.identical_count}",
        ]
        for s, (ssim_row, psnr_row) in enumerate(zip(self.ssim, self.psnr)):
            for n, (ssim_value, psnr_value) in enumerate(zip(ssim_row, psnr_row)):
                psnr_text = psnr_value if isinstance(psnr_value, str) else f"{psnr_value:.6f}"
                lines.append(f"{prefix} slice={s} contrast={n} ssim={ssim_value:.6f} psnr={psnr_text}")
        return lines
