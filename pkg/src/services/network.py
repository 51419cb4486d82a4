"""MLP head of the implicit representation, its manual backward pass and full-grid evaluation"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.exceptions import ActivationCacheError, ShapeMismatchError
from src.models import ContrastImageStack, InrModel, MlpParams
from src.schemas import HashGridConfig
from src.services.encoding import EncodingPlan, encode, init_tables, prepare_encoding


@dataclass
class ForwardCache:
    """Activations kept by mlp_forward for the backward pass."""
    features: np.ndarray
    z0: np.ndarray
    h0: np.ndarray
    z1: np.ndarray
    h1: np.ndarray


def _uniform_layer(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tuple[np.ndarray, np.ndarray]:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)), rng.uniform(-bound, bound, size=fan_out)


def init_model(config: HashGridConfig, n_contrasts: int, hidden_width: int = 64, seed: int = 0,
               dtype: str = "float32") -> InrModel:
    """
    The init_model function draws a fresh representation: hash tables uniform in [-1e-4, 1e-4],
    hidden layers uniform in +-1/sqrt(fan_in) and a zero output layer, so the initial image is zero.

    :param config: Encoding configuration with a finest resolution
    :type config: HashGridConfig
    :param n_contrasts: Number of complex output contrasts N
    :type n_contrasts: int
    :param hidden_width: Neurons per hidden layer
    :type hidden_width: int
    :param seed: Seed of the initialization
    :type seed: int
    :param dtype: Parameter dtype, float32 or float64
    :type dtype: str
    :return: Untrained model
    :rtype: InrModel
    """
    rng = np.random.default_rng(seed)
    tables = init_tables(config, rng, dtype)
    width_in = config.levels * config.features
    w0, b0 = _uniform_layer(rng, width_in, hidden_width)
    w1, b1 = _uniform_layer(rng, hidden_width, hidden_width)
    w2 = np.zeros((hidden_width, 2 * n_contrasts))
    b2 = np.zeros(2 * n_contrasts)
    mlp = MlpParams(*(array.astype(dtype) for array in (w0, b0, w1, b1, w2, b2)))
    return InrModel(tables, mlp)


def voxel_coordinates(grid: Tuple[int, int]) -> np.ndarray:
    """Voxel centres ((i + 0.5) / Vy, (j + 0.5) / Vz) in row-major order, shape (Vy * Vz, 2)."""
    vy, vz = grid
    y = (np.arange(vy) + 0.5) / vy
    z = (np.arange(vz) + 0.5) / vz
    yy, zz = np.meshgrid(y, z, indexing="ij")
    return np.stack([yy.ravel(), zz.ravel()], axis=1)


def mlp_forward(features: np.ndarray, mlp: MlpParams, return_cache: bool = False):
    """
    The mlp_forward function runs two ReLU hidden layers and a linear head in float64 and reads
    output channels (2k, 2k + 1) as the real and imaginary part of contrast k.

    :param features: Encoded coordinates (B, L * F)
    :type features: np.ndarray
    :param mlp: Network parameters
    :type mlp: MlpParams
    :param return_cache: Also return the activations needed by mlp_backward
    :type return_cache: bool
    :return: Complex outputs (B, N), and the ForwardCache when requested
    :rtype: np.ndarray | tuple[np.ndarray, ForwardCache]
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mlp.w0.shape[0]:
        raise ShapeMismatchError(f"features {x.shape} do not match first layer {mlp.w0.shape}")
    z0 = x @ mlp.w0.astype(np.float64) + mlp.b0
    h0 = np.maximum(z0, 0.0)
    z1 = h0 @ mlp.w1.astype(np.float64) + mlp.b1
    h1 = np.maximum(z1, 0.0)
    out = h1 @ mlp.w2.astype(np.float64) + mlp.b2
    values = out[:, 0::2] + 1j * out[:, 1::2]
    if return_cache:
        return values, ForwardCache(x, z0, h0, z1, h1)
    return values


def mlp_backward(cache: Optional[ForwardCache], mlp: MlpParams,
                 grad_out: np.ndarray) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    """
    The mlp_backward function applies the chain rule through the head and both hidden layers.
    ``grad_out`` is the Wirtinger cogradient dL/dconj(out); the real and imaginary output
    channels receive 2 * Re and 2 * Im of it.

    :param cache: Activations of the matching mlp_forward call
    :type cache: ForwardCache | None
    :param mlp: Network parameters used in that call
    :type mlp: MlpParams
    :param grad_out: Complex upstream gradient (B, N)
    :type grad_out: np.ndarray
    :return: Parameter gradients by name and the gradient with respect to the features
    :rtype: tuple[dict[str, np.ndarray], np.ndarray]
    """
    if cache is None:
        raise ActivationCacheError("mlp_backward needs the activations of mlp_forward(return_cache=True)")
    grad_out = np.asarray(grad_out)
    batch = cache.h1.shape[0]
    if grad_out.shape != (batch, mlp.n_contrasts):
        raise ShapeMismatchError(f"upstream gradient {grad_out.shape} does not match ({batch}, {mlp.n_contrasts})")
    d_out = np.empty((batch, 2 * mlp.n_contrasts))
    d_out[:, 0::2] = 2.0 * grad_out.real
    d_out[:, 1::2] = 2.0 * grad_out.imag

    grads = {"w2": cache.h1.T @ d_out, "b2": d_out.sum(axis=0)}
    d_z1 = (d_out @ mlp.w2.T.astype(np.float64)) * (cache.z1 > 0)
    grads["w1"] = cache.h0.T @ d_z1
    grads["b1"] = d_z1.sum(axis=0)
    d_z0 = (d_z1 @ mlp.w1.T.astype(np.float64)) * (cache.z0 > 0)
    grads["w0"] = cache.features.T @ d_z0
    grads["b0"] = d_z0.sum(axis=0)
    d_features = d_z0 @ mlp.w0.T.astype(np.float64)
    return grads, d_features


def outputs_to_stack(values: np.ndarray, grid: Tuple[int, int]) -> np.ndarray:
    """Reshape per-voxel outputs (Vy * Vz, N) into images (N, Vy, Vz)."""
    return values.T.reshape(values.shape[1], *grid)


def evaluate_image(model: InrModel, grid: Tuple[int, int], plan: Optional[EncodingPlan] = None) -> ContrastImageStack:
    """
    The evaluate_image function queries the representation at every voxel centre.

    :param model: Trained or initial model
    :type model: InrModel
    :param grid: Voxel counts (Vy, Vz)
    :type grid: tuple[int, int]
    :param plan: Encoding plan of voxel_coordinates(grid), built when omitted
    :type plan: EncodingPlan | None
    :return: Complex image stack (N, Vy, Vz)
    :rtype: ContrastImageStack
    """
    coords = voxel_coordinates(grid)
    if plan is None:
        plan = prepare_encoding(coords, model.tables.config)
    values = mlp_forward(encode(coords, model.tables, plan), model.mlp)
    return ContrastImageStack(outputs_to_stack(values, grid))
