"""Adam optimizer over named numpy parameter arrays"""

from dataclasses import dataclass, field
from typing import Dict, Union

import numpy as np

from src.exceptions import ShapeMismatchError


@dataclass
class AdamState:
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def init_adam_state(params: Dict[str, np.ndarray]) -> AdamState:
    """Zero first and second moments in float64 for every parameter."""
    return AdamState(
        t=0,
        m={name: np.zeros(value.shape) for name, value in params.items()},
        v={name: np.zeros(value.shape) for name, value in params.items()},
    )


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState,
              lr: Union[float, Dict[str, float]], beta1: float = 0.9, beta2: float = 0.99,
              eps: float = 1e-15) -> AdamState:
    """
    The adam_step function performs one bias-corrected Adam update. Parameters are updated in
    place, the moments are accumulated in float64.

    :param params: Parameter arrays by name
    :type params: dict[str, np.ndarray]
    :param grads: Gradients with the same names and shapes
    :type grads: dict[str, np.ndarray]
    :param state: Moments and step counter, advanced in place
    :type state: AdamState
    :param lr: Learning rate, or one rate per parameter name
    :type lr: float | dict[str, float]
    :param beta1: Decay of the first moment
    :type beta1: float
    :param beta2: Decay of the second moment
    :type beta2: float
    :param eps: Denominator offset
    :type eps: float
    :return: The advanced state
    :rtype: AdamState
    """
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name, param in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != param.shape or state.m[name].shape != param.shape:
            raise ShapeMismatchError(f"gradient or moment shape of {name} does not match {param.shape}")
        rate = lr[name] if isinstance(lr, dict) else lr
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        update = (rate / bc1) * m / (np.sqrt(v / bc2) + eps)
        param -= update.astype(param.dtype)
    return state
