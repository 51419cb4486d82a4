"""Image-quality evaluation: brain-mask restricted joint percentile normalization, SSIM and PSNR"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from skimage.metrics import structural_similarity

from src.exceptions import DegenerateNormalizationError, InvalidParameterError, ShapeMismatchError, WindowTooLargeError
from src.models import ContrastImageStack
from src.schemas import MetricParams, MetricReport, PsnrValue
from src.services.sampling import scan_time_minutes

IDENTICAL = "identical"
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

ArrayLike = Union[np.ndarray, ContrastImageStack]


def _as_array(stack: ArrayLike) -> np.ndarray:
    return stack.data if isinstance(stack, ContrastImageStack) else np.asarray(stack)


def _eval_mask(shape: Tuple[int, int], mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise ShapeMismatchError(f"evaluation mask {mask.shape} does not match images {shape}")
    if not mask.any():
        raise InvalidParameterError("evaluation mask is empty")
    return mask


def percentile_window(stacks: Sequence[ArrayLike], mask: Optional[np.ndarray] = None, p_lo: float = 1.0,
                      p_hi: float = 99.0) -> Tuple[float, float]:
    """
    The percentile_window function pools the masked magnitudes of all stacks, whatever their
    leading contrast and slice axes, and returns one (lo, hi) percentile pair.

    :param stacks: Image arrays (..., Vy, Vz)
    :type stacks: Sequence[np.ndarray | ContrastImageStack]
    :param mask: Evaluation region (Vy, Vz), everything when None
    :type mask: np.ndarray | None
    :param p_lo: Lower percentile
    :type p_lo: float
    :param p_hi: Upper percentile
    :type p_hi: float
    :return: Window bounds
    :rtype: tuple[float, float]
    """
    if not 0 <= p_lo < p_hi <= 100:
        raise InvalidParameterError("percentiles must satisfy 0 <= p_lo < p_hi <= 100")
    arrays = [_as_array(stack) for stack in stacks]
    if not arrays:
        raise InvalidParameterError("nothing to normalize")
    grids = {array.shape[-2:] for array in arrays}
    if len(grids) > 1:
        raise ShapeMismatchError(f"stacks differ in grid: {sorted(grids)}")
    region = _eval_mask(arrays[0].shape[-2:], mask)
    pooled = np.concatenate([np.abs(array)[..., region].ravel() for array in arrays])
    lo, hi = np.percentile(pooled, [p_lo, p_hi])
    if not hi > lo:
        raise DegenerateNormalizationError(f"percentile window collapsed to {lo:g}")
    return float(lo), float(hi)


def joint_percentile_normalize(stacks: Sequence[ArrayLike], mask: Optional[np.ndarray] = None, p_lo: float = 1.0,
                               p_hi: float = 99.0) -> List[np.ndarray]:
    """
    The joint_percentile_normalize function maps the magnitude of every stack through the shared
    window (x - lo) / (hi - lo) and clips to [0, 1].

    :param stacks: Image arrays (..., Vy, Vz)
    :type stacks: Sequence[np.ndarray | ContrastImageStack]
    :param mask: Evaluation region (Vy, Vz), everything when None
    :type mask: np.ndarray | None
    :param p_lo: Lower percentile
    :type p_lo: float
    :param p_hi: Upper percentile
    :type p_hi: float
    :return: Normalized magnitudes, one float64 array per input
    :rtype: list[np.ndarray]
    """
    lo, hi = percentile_window(stacks, mask, p_lo, p_hi)
    return [np.clip((np.abs(_as_array(stack)) - lo) / (hi - lo), 0.0, 1.0) for stack in stacks]


def psnr(ref: np.ndarray, test: np.ndarray, mask: Optional[np.ndarray] = None) -> PsnrValue:
    """
    The psnr function computes 10 log10(1 / MSE) over the masked voxels of images normalized
    to [0, 1]. Identical inputs give the string "identical" instead of infinity.

    :param ref: Reference image (Vy, Vz)
    :type ref: np.ndarray
    :param test: Test image (Vy, Vz)
    :type test: np.ndarray
    :param mask: Evaluation region, everything when None
    :type mask: np.ndarray | None
    :return: PSNR in dB or "identical"
    :rtype: float | str
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ShapeMismatchError(f"images differ in shape: {ref.shape} vs {test.shape}")
    region = _eval_mask(ref.shape, mask)
    mse = float(np.mean((ref[region] - test[region]) ** 2))
    if mse == 0.0:
        return IDENTICAL
    return 10.0 * np.log10(1.0 / mse)


def ssim(ref: np.ndarray, test: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """
    The ssim function averages the local SSIM map (Gaussian window of size 11 and sigma 1.5,
    C1 = 0.01^2 and C2 = 0.03^2 for data range 1) over masked voxels whose window lies inside
    the image.

    :param ref: Reference image (Vy, Vz) in [0, 1]
    :type ref: np.ndarray
    :param test: Test image (Vy, Vz) in [0, 1]
    :type test: np.ndarray
    :param mask: Evaluation region, everything when None
    :type mask: np.ndarray | None
    :return: Mean SSIM
    :rtype: float
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ShapeMismatchError(f"images differ in shape: {ref.shape} vs {test.shape}")
    if ref.ndim != 2 or min(ref.shape) < SSIM_WINDOW:
        raise WindowTooLargeError(f"SSIM window {SSIM_WINDOW} does not fit image {ref.shape}")
    region = _eval_mask(ref.shape, mask)
    _, ssim_map = structural_similarity(ref, test, data_range=1.0, gaussian_weights=True, sigma=SSIM_SIGMA,
                                        use_sample_covariance=False, full=True)
    pad = (SSIM_WINDOW - 1) // 2
    interior = np.zeros_like(region)
    interior[pad:-pad, pad:-pad] = True
    selected = ssim_map[region & interior]
    if selected.size == 0:
        raise WindowTooLargeError("evaluation mask lies entirely within the SSIM border")
    return float(selected.mean())


def _summary(values: np.ndarray) -> Tuple[float, float, float, float]:
    """Mean, std over all values, std of the slice means and std of the contrast means (nan-aware)."""
    return (float(np.nanmean(values)), float(np.nanstd(values)),
            float(np.nanstd(np.nanmean(values, axis=1))), float(np.nanstd(np.nanmean(values, axis=0))))


def evaluate_volume(reference: np.ndarray, test: np.ndarray, mask: Optional[np.ndarray] = None,
                    params: Optional[MetricParams] = None, method: str = "inr",
                    acceleration: float = 1.0) -> MetricReport:
    """
    The evaluate_volume function normalizes reference and test volumes, each jointly across
    slices and contrasts, and scores every (slice, contrast) pair.

    :param reference: Reference images (S, N, Vy, Vz) or (N, Vy, Vz)
    :type reference: np.ndarray
    :param test: Test images with the same shape
    :type test: np.ndarray
    :param mask: Evaluation region (Vy, Vz)
    :type mask: np.ndarray | None
    :param params: Percentiles of the normalization
    :type params: MetricParams | None
    :param method: Method name stored in the report
    :type method: str
    :param acceleration: Acceleration stored in the report
    :type acceleration: float
    :return: Per-pair values and aggregates
    :rtype: MetricReport
    """
    params = params or MetricParams()
    reference = _as_array(reference)
    test = _as_array(test)
    if reference.shape != test.shape:
        raise ShapeMismatchError(f"volumes differ in shape: {reference.shape} vs {test.shape}")
    if reference.ndim == 3:
        reference, test = reference[None], test[None]
    if reference.ndim != 4:
        raise ShapeMismatchError(f"expected (S, N, Vy, Vz) volumes, got {reference.shape}")
    ref_norm, = joint_percentile_normalize([reference], mask, params.p_lo, params.p_hi)
    test_norm, = joint_percentile_normalize([test], mask, params.p_lo, params.p_hi)

    n_slices, n_contrasts = reference.shape[:2]
    ssim_rows, psnr_rows = [], []
    for s in range(n_slices):
        ssim_rows.append([ssim(ref_norm[s, n], test_norm[s, n], mask) for n in range(n_contrasts)])
        psnr_rows.append([psnr(ref_norm[s, n], test_norm[s, n], mask) for n in range(n_contrasts)])

    ssim_values = np.array(ssim_rows)
    psnr_values = np.array([[np.nan if isinstance(value, str) else value for value in row] for row in psnr_rows],
                           dtype=np.float64)
    identical = int(np.isnan(psnr_values).sum())
    ssim_mean, ssim_std, ssim_std_slices, ssim_std_contrasts = _summary(ssim_values)
    if identical == psnr_values.size:
        psnr_mean, psnr_std, psnr_std_slices, psnr_std_contrasts = IDENTICAL, 0.0, 0.0, 0.0
    else:
        psnr_mean, psnr_std, psnr_std_slices, psnr_std_contrasts = _summary(psnr_values)
    return MetricReport(
        method=method, acceleration=acceleration, ssim=ssim_rows, psnr=psnr_rows,
        ssim_mean=ssim_mean, ssim_std=ssim_std, ssim_std_slices=ssim_std_slices,
        ssim_std_contrasts=ssim_std_contrasts, psnr_mean=psnr_mean, psnr_std=psnr_std,
        psnr_std_slices=psnr_std_slices, psnr_std_contrasts=psnr_std_contrasts, identical_count=identical,
    )


def format_table(reports: Sequence[MetricReport], full_minutes: Optional[float] = None) -> str:
    """
    The format_table function lays out reports like a results table: one SSIM and one PSNR row
    per method, one column per acceleration, cells "mean ± std". With ``full_minutes`` a last row
    gives the accelerated scan time of every column.

    :param reports: Reports of any methods and accelerations
    :type reports: Sequence[MetricReport]
    :param full_minutes: Fully sampled scan time in minutes
    :type full_minutes: float | None
    :return: Plain-text table
    :rtype: str
    """
    accelerations = sorted({report.acceleration for report in reports})
    methods = list(dict.fromkeys(report.method for report in reports))
    cells = {(report.method, report.acceleration): report for report in reports}
    header = ["method", "metric"] + [f"R={value:g}" for value in accelerations]
    rows = [header]
    for method in methods:
        for metric in ("SSIM", "PSNR"):
            row = [method, metric]
            for acceleration in accelerations:
                report = cells.get((method, acceleration))
                if report is None:
                    row.append("-")
                elif metric == "SSIM":
                    row.append(f"{report.ssim_mean:.3f} ± {report.ssim_std:.3f}")
                elif isinstance(report.psnr_mean, str):
                    row.append(report.psnr_mean)
                else:
                    row.append(f"{report.psnr_mean:.2f} ± {report.psnr_std:.2f}")
            rows.append(row)
    if full_minutes is not None:
        rows.append(["scan", "minutes"] + [f"{scan_time_minutes(full_minutes, value):.2f}" for value in accelerations])
    widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
    return "\n".join("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows)


def adjacent_slice_difference(volume: np.ndarray, mask: Optional[np.ndarray] = None,
                              params: Optional[MetricParams] = None) -> float:
    """Mean absolute difference between neighbouring normalized slices of an (S, N, Vy, Vz) volume."""
    params = params or MetricParams()
    volume = _as_array(volume)
    if volume.ndim != 4 or volume.shape[0] < 2:
        raise InvalidParameterError("adjacent slice difference needs a volume with at least two slices")
    normalized, = joint_percentile_normalize([volume], mask, params.p_lo, params.p_hi)
    region = _eval_mask(volume.shape[-2:], mask)
    return float(np.mean(np.abs(np.diff(normalized, axis=0))[..., region]))
