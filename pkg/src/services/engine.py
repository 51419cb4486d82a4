"""Per-slice training of the joint representation, the slice-parallel volume driver and the separate-model baseline"""

import logging
import time
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from src.exceptions import DivergenceError, InvalidParameterError, ReconError, ShapeMismatchError, SliceFailureError
from src.models import CoilSensitivities, ContrastImageStack, DistanceWeights, InrModel, KSpaceData, MaskSet, MlpParams
from src.schemas import TrainConfig
from src.services.encoding import EncodingPlan, encode, encode_backward, prepare_encoding
from src.services.network import (
    evaluate_image,
    init_model,
    mlp_backward,
    mlp_forward,
    outputs_to_stack,
    voxel_coordinates,
)
from src.services.operators import loss_grad_images, weighted_loss
from src.services.optim import adam_step, init_adam_state

logger = logging.getLogger(__name__)


@dataclass
class ReconResult:
    images: ContrastImageStack
    losses: List[float]
    model: InrModel
    scale: float = 1.0
    restarted: bool = False


@dataclass
class SliceOutcome:
    index: int
    result: Optional[ReconResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class VolumeResult:
    outcomes: List[SliceOutcome] = field(default_factory=list)

    @property
    def failures(self) -> dict:
        return {outcome.index: outcome.error for outcome in self.outcomes if not outcome.ok}

    def volume(self) -> np.ndarray:
        """Stacked images (S, N, Vy, Vz); raises SliceFailureError when a slice failed."""
        if self.failures:
            raise SliceFailureError(self.failures)
        return np.stack([outcome.result.images.data for outcome in self.outcomes])


def _learning_rates(cfg: TrainConfig, factor: float) -> dict:
    rates = {name: cfg.lr_mlp * factor for name in MlpParams.NAMES}
    rates["tables"] = cfg.lr_tables * factor
    return rates


def loss_and_gradients(model: InrModel, target: KSpaceData, coils: CoilSensitivities, masks: MaskSet,
                       weights: DistanceWeights, coords: np.ndarray, plan: EncodingPlan,
                       epoch: int = 0, last_loss: Optional[float] = None):
    """
    The loss_and_gradients function evaluates the model on the voxel grid, measures the weighted
    k-space loss and returns its gradient with respect to every trainable array.

    :param model: Current model
    :type model: InrModel
    :param target: Acquired k-space
    :type target: KSpaceData
    :param coils: Coil sensitivities
    :type coils: CoilSensitivities
    :param masks: Sampling masks
    :type masks: MaskSet
    :param weights: Distance weights
    :type weights: DistanceWeights
    :param coords: Voxel coordinates of the grid
    :type coords: np.ndarray
    :param plan: Encoding plan of ``coords``
    :type plan: EncodingPlan
    :param epoch: Epoch reported on divergence
    :type epoch: int
    :param last_loss: Last finite loss reported on divergence
    :type last_loss: float | None
    :return: Image stack, loss and gradients keyed like model.parameters()
    :rtype: tuple[ContrastImageStack, float, dict[str, np.ndarray]]
    """
    features = encode(coords, model.tables, plan)
    values, cache = mlp_forward(features, model.mlp, return_cache=True)
    if not np.all(np.isfinite(values)):
        raise DivergenceError("network output is not finite", epoch, last_loss)
    image = ContrastImageStack(outputs_to_stack(values, target.grid))
    loss = weighted_loss(image, coils, masks, target, weights)
    if not np.isfinite(loss):
        raise DivergenceError("loss is not finite", epoch, last_loss)

    grad_images = loss_grad_images(image, coils, masks, target, weights)
    # dL/dRe + i dL/dIm is twice the cogradient the network expects
    grad_values = 0.5 * grad_images.data.reshape(target.n_contrasts, -1).T
    mlp_grads, grad_features = mlp_backward(cache, model.mlp, grad_values)
    grads = {"tables": encode_backward(coords, grad_features, model.tables, plan), **mlp_grads}
    return image, loss, grads


def _train(target: KSpaceData, coils: CoilSensitivities, masks: MaskSet, weights: DistanceWeights,
           cfg: TrainConfig, lr_factor: float, slice_index: int):
    grid = target.grid
    config = cfg.encoding.resolved(grid)
    model = init_model(config, target.n_contrasts, cfg.hidden_width, cfg.seed, cfg.param_dtype)
    coords = voxel_coordinates(grid)
    plan = prepare_encoding(coords, config)
    params = model.parameters()
    state = init_adam_state(params)
    rates = _learning_rates(cfg, lr_factor)

    losses: List[float] = []
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        image, loss, grads = loss_and_gradients(model, target, coils, masks, weights, coords, plan, epoch,
                                                losses[-1] if losses else None)
        losses.append(loss)
        adam_step(params, grads, state, rates, cfg.beta1, cfg.beta2, cfg.eps)

        if (epoch + 1) % cfg.log_every == 0 or epoch + 1 == cfg.epochs:
            logger.info(f"slice={slice_index} epoch={epoch + 1} loss={loss:.6e} wall={time.perf_counter() - start:.2f}")

    # image of the final parameters, as checkpointed
    image = evaluate_image(model, grid, plan)
    if not np.all(np.isfinite(image.data)):
        raise DivergenceError("network output is not finite", cfg.epochs, losses[-1])
    return image, losses, model


def reconstruct_slice(data: KSpaceData, coils: CoilSensitivities, masks: MaskSet, weights: DistanceWeights,
                      cfg: TrainConfig, slice_index: int = 0) -> ReconResult:
    """
    The reconstruct_slice function fits one joint representation to the acquired k-space of a slice.
    Every epoch evaluates the full image grid, measures the weighted loss, backpropagates through
    the network and the hash tables and takes one Adam step. The image of the final epoch is the
    reconstruction. Data are scaled to unit peak magnitude during training and scaled back after.
    A non-finite loss restarts training once with the learning rates multiplied by
    ``cfg.restart_lr_factor``.

    :param data: Acquired k-space (C, N, Vy, Vz)
    :type data: KSpaceData
    :param coils: Coil sensitivities
    :type coils: CoilSensitivities
    :param masks: Sampling masks of the contrasts
    :type masks: MaskSet
    :param weights: Distance weights
    :type weights: DistanceWeights
    :param cfg: Training configuration
    :type cfg: TrainConfig
    :param slice_index: Slice number used in log lines
    :type slice_index: int
    :return: Final-epoch images, loss trace and trained model
    :rtype: ReconResult
    """
    if data.n_contrasts != masks.n_contrasts or data.grid != masks.grid:
        raise ShapeMismatchError("k-space and masks disagree in shape")
    scale = float(np.abs(data.data).max()) if cfg.normalize else 1.0
    if scale == 0.0:
        scale = 1.0
    target = KSpaceData(data.data / scale, masks)
    try:
        image, losses, model = _train(target, coils, masks, weights, cfg, 1.0, slice_index)
        restarted = False
    except DivergenceError as exc:
        logger.warning(f"slice={slice_index} diverged epoch={exc.epoch} restart_lr_factor={cfg.restart_lr_factor}")
        image, losses, model = _train(target, coils, masks, weights, cfg, cfg.restart_lr_factor, slice_index)
        restarted = True
    return ReconResult(ContrastImageStack(image.data * scale), losses, model, scale, restarted)


def _reconstruct_outcome(index, data, coils, masks, weights, cfg) -> SliceOutcome:
    try:
        return SliceOutcome(index, result=reconstruct_slice(data, coils, masks, weights, cfg, slice_index=index))
    except ReconError as exc:
        logger.error(f"slice={index} failed code={exc.code} detail=\"{exc.detail}\"")
        return SliceOutcome(index, error=exc.detail)
    except Exception as exc:
        logger.exception(f"slice={index} failed error={type(exc).__name__}")
        return SliceOutcome(index, error=f"{type(exc).__name__}: {exc}")


def _collect(index: int, future: Future) -> SliceOutcome:
    try:
        return future.result()
    except Exception as exc:
        logger.error(f"slice={index} worker failed error={type(exc).__name__}")
        return SliceOutcome(index, error=f"{type(exc).__name__}: {exc}")


def reconstruct_volume(slices: Sequence[KSpaceData], coils: Union[CoilSensitivities, Sequence[CoilSensitivities]],
                       masks: MaskSet, weights: DistanceWeights, cfg: TrainConfig, workers: int = 1) -> VolumeResult:
    """
    The reconstruct_volume function reconstructs every slice independently with the same
    configuration. Slices run in a process pool when ``workers`` > 1; the outcome order
    always matches the input order and a failed slice does not stop the others.

    :param slices: Slice-decoupled k-space
    :type slices: Sequence[KSpaceData]
    :param coils: One coil set shared by all slices, or one per slice
    :type coils: CoilSensitivities | Sequence[CoilSensitivities]
    :param masks: Sampling masks shared by all slices
    :type masks: MaskSet
    :param weights: Distance weights
    :type weights: DistanceWeights
    :param cfg: Training configuration
    :type cfg: TrainConfig
    :param workers: Number of worker processes
    :type workers: int
    :return: One outcome per slice
    :rtype: VolumeResult
    """
    if workers < 1:
        raise InvalidParameterError("workers must be at least 1")
    if not slices:
        raise InvalidParameterError("no slices to reconstruct")
    per_slice = [coils] * len(slices) if isinstance(coils, CoilSensitivities) else list(coils)
    if len(per_slice) != len(slices):
        raise ShapeMismatchError(f"{len(per_slice)} coil sets for {len(slices)} slices")
    jobs = [(index, data, per_slice[index], masks, weights, cfg) for index, data in enumerate(slices)]
    if workers == 1 or len(jobs) == 1:
        return VolumeResult([_reconstruct_outcome(*job) for job in jobs])
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        futures = [pool.submit(_reconstruct_outcome, *job) for job in jobs]
        return VolumeResult([_collect(job[0], future) for job, future in zip(jobs, futures)])


def reconstruct_separately(data: KSpaceData, coils: CoilSensitivities, masks: MaskSet, weights: DistanceWeights,
                           cfg: TrainConfig, slice_index: int = 0) -> List[ReconResult]:
    """
    The reconstruct_separately function trains one single-contrast model per contrast with the
    same number of epochs, the baseline for the joint model.

    :param data: Acquired k-space (C, N, Vy, Vz)
    :type data: KSpaceData
    :param coils: Coil sensitivities
    :type coils: CoilSensitivities
    :param masks: Sampling masks
    :type masks: MaskSet
    :param weights: Distance weights
    :type weights: DistanceWeights
    :param cfg: Training configuration applied to every model
    :type cfg: TrainConfig
    :param slice_index: Slice number used in log lines
    :type slice_index: int
    :return: One result per contrast
    :rtype: list[ReconResult]
    """
    results = []
    for n in range(data.n_contrasts):
        subset = masks.subset(n)
        single = KSpaceData(data.data[:, n:n + 1], subset)
        results.append(reconstruct_slice(single, coils, subset, weights, cfg, slice_index))
    return results


def stack_separate(results: Sequence[ReconResult]) -> ContrastImageStack:
    """Concatenate single-contrast reconstructions into one stack."""
    return ContrastImageStack(np.concatenate([result.images.data for result in results]))
