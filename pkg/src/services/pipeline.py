"""End-to-end runs: phantom, coils and masks, simulated acquisition, both reconstructions and their evaluation"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.models import CoilSensitivities, ContrastImageStack, DistanceWeights, KSpaceData, MaskSet
from src.repository.storage import decouple_readout, recompose_readout
from src.schemas import MetricReport, PipelineConfig
from src.services.engine import VolumeResult, reconstruct_volume
from src.services.metrics import evaluate_volume
from src.services.operators import adjoint_model, distance_weights, forward_model
from src.services.phantom import coil_laplacian, complex_noise, make_coil_maps, slice_specs, synthesize_volume
from src.services.sampling import complementary_mask_set, full_mask_set

logger = logging.getLogger(__name__)


@dataclass
class Simulation:
    """Everything a reconstruction needs, plus the ground truth it is scored against."""
    ground_truth: np.ndarray
    support: np.ndarray
    ti: List[float]
    coils: CoilSensitivities
    masks: MaskSet
    full: List[KSpaceData]
    acquired: List[KSpaceData]
    weights: DistanceWeights
    sigma: float
    coil_laplacian: float = 0.0


@dataclass
class PipelineResult:
    simulation: Simulation
    inr: VolumeResult
    zero_filled: np.ndarray
    reports: Dict[str, MetricReport] = field(default_factory=dict)

    @property
    def inr_volume(self) -> np.ndarray:
        return self.inr.volume()


def build_masks(config: PipelineConfig) -> MaskSet:
    """Complementary masks of all contrasts from the configured acceleration and base seed."""
    params = config.masks
    return complementary_mask_set(
        tuple(config.grid), params.acceleration, params.center_radius, config.phantom_spec().n_contrasts,
        base_seed=config.mask_seed, alpha=params.alpha, tolerance=params.tolerance,
        max_iterations=params.max_iterations,
    )


def simulate(config: PipelineConfig, masks: Optional[MaskSet] = None) -> Simulation:
    """
    The simulate function builds the phantom volume and acquires it: every slice is projected
    onto the coils and Fourier transformed, the slices are recomposed into 3D k-space along the
    readout axis, undersampled in the phase-encoding plane, corrupted with complex Gaussian noise
    at the sampled locations and decoupled back into per-slice k-space.

    :param config: Validated run configuration
    :type config: PipelineConfig
    :param masks: Masks to acquire with, built from the configuration when omitted
    :type masks: MaskSet | None
    :return: Ground truth, operators and acquired data
    :rtype: Simulation
    """
    grid = tuple(config.grid)
    spec = config.phantom_spec()
    ground_truth, support = synthesize_volume(slice_specs(spec, config.slices, config.slice_taper))
    coils = make_coil_maps(grid, config.coils.coils, config.coils.smoothness, seed=config.coil_seed, support=support)
    laplacian = coil_laplacian(coils)
    if laplacian > config.coils.laplacian_bound:
        logger.warning(f"coil_laplacian={laplacian:.4f} bound={config.coils.laplacian_bound:g}")
    masks = masks if masks is not None else build_masks(config)
    full_masks = full_mask_set(grid, spec.n_contrasts)

    full = [forward_model(ContrastImageStack(ground_truth[s]), coils, full_masks) for s in range(config.slices)]
    volume_kspace = recompose_readout(np.stack([data.data for data in full]))
    sigma = config.noise.relative_sigma * float(max(np.abs(data.data).max() for data in full))
    bits = masks.bits[None, None]
    measured = volume_kspace * bits
    if sigma > 0:
        measured = measured + complex_noise(volume_kspace.shape, sigma, seed=config.noise_seed) * bits
    slices = decouple_readout(measured) * bits
    acquired = [KSpaceData(slices[s], masks) for s in range(config.slices)]
    logger.info(f"slices={config.slices} coils={coils.n_coils} contrasts={spec.n_contrasts} "
                f"R={config.masks.acceleration:g} sigma={sigma:.3e}")
    return Simulation(ground_truth, support, list(spec.ti_schedule), coils, masks, full, acquired,
                      distance_weights(grid), sigma, laplacian)


def zero_filled(simulation: Simulation) -> np.ndarray:
    """Adjoint reconstruction of every slice, (S, N, Vy, Vz)."""
    return np.stack([adjoint_model(data, simulation.coils, simulation.masks).data for data in simulation.acquired])


def run_pipeline(config: PipelineConfig, workers: int = 1, simulation: Optional[Simulation] = None) -> PipelineResult:
    """
    The run_pipeline function simulates the acquisition, reconstructs it with the joint
    representation and with the zero-filled adjoint, and scores both against the ground truth
    inside the phantom support.

    :param config: Validated run configuration
    :type config: PipelineConfig
    :param workers: Slice-parallel worker processes
    :type workers: int
    :param simulation: Previously simulated data, simulated from the configuration when omitted
    :type simulation: Simulation | None
    :return: Reconstructions and metric reports keyed by method
    :rtype: PipelineResult
    """
    simulation = simulation or simulate(config)
    train = config.train.model_copy(update={"seed": config.train_seed})
    inr = reconstruct_volume(simulation.acquired, simulation.coils, simulation.masks, simulation.weights, train,
                             workers=workers)
    baseline = zero_filled(simulation)
    result = PipelineResult(simulation, inr, baseline)
    acceleration = config.masks.acceleration
    result.reports["inr"] = evaluate_volume(simulation.ground_truth, result.inr_volume, simulation.support,
                                            config.metrics, "inr", acceleration)
    result.reports["zero-filled"] = evaluate_volume(simulation.ground_truth, baseline, simulation.support,
                                                    config.metrics, "zero-filled", acceleration)
    return result


def run_sweep(config: PipelineConfig, accelerations: Optional[Sequence[float]] = None,
              workers: int = 1) -> List[MetricReport]:
    """Pipeline runs at several accelerations on the same phantom and seeds."""
    reports = []
    for acceleration in accelerations or config.sweep_accelerations:
        data = config.model_dump()
        data["masks"]["acceleration"] = acceleration
        result = run_pipeline(PipelineConfig.model_validate(data), workers=workers)
        reports.extend(result.reports.values())
    return reports
