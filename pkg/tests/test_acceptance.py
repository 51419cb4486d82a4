import pytest

from src.models import KSpaceData
from src.schemas import MaskParams, PipelineConfig
from src.services.engine import reconstruct_separately, reconstruct_slice
from src.services.metrics import adjacent_slice_difference
from src.services.operators import heldout_loss
from src.services.pipeline import run_pipeline, simulate

pytestmark = pytest.mark.acceptance


def phantom_config(acceleration: float, slices: int = 1) -> PipelineConfig:
    return PipelineConfig(grid=(64, 64), slices=slices, masks=MaskParams(acceleration=acceleration), seed=0)


def test_fully_sampled_quality():
    report = run_pipeline(phantom_config(1.0)).reports["inr"]
    assert report.ssim_mean >= 0.95
    assert report.psnr_mean >= 30.0


def test_acceleration_robustness():
    inr, baseline = [], []
    for acceleration in (4.0, 8.0, 12.0):
        reports = run_pipeline(phantom_config(acceleration)).reports
        inr.append(reports["inr"].psnr_mean)
        baseline.append(reports["zero-filled"].psnr_mean)
    for joint, zero_filled in zip(inr, baseline):
        assert joint >= zero_filled + 3.0
    for denser, sparser in zip(inr, inr[1:]):
        assert sparser <= denser + 0.5


def test_joint_beats_separate_models():
    config = phantom_config(8.0)
    simulation = simulate(config)
    train = config.train.model_copy(update={"seed": config.train_seed})
    data, full = simulation.acquired[0], simulation.full[0]
    coils, masks, weights = simulation.coils, simulation.masks, simulation.weights

    joint = reconstruct_slice(data, coils, masks, weights, train)
    joint_loss = heldout_loss(joint.images, coils, masks, full, weights)
    separate_loss = 0.0
    for n, result in enumerate(reconstruct_separately(data, coils, masks, weights, train)):
        subset = masks.subset(n)
        single_full = KSpaceData(full.data[:, n:n + 1], full.masks.subset(n))
        separate_loss += heldout_loss(result.images, coils, subset, single_full, weights)
    assert joint_loss < separate_loss


def test_cross_plane_continuity():
    config = phantom_config(8.0, slices=4)
    result = run_pipeline(config)
    support = result.simulation.support
    truth = adjacent_slice_difference(result.simulation.ground_truth, support, config.metrics)
    assert adjacent_slice_difference(result.inr_volume, support, config.metrics) <= 2.0 * truth
