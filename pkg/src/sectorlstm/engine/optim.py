"""Adam with bias correction, applied tensor by tensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .model import ModelConfig, ModelParams


@dataclass(frozen=True, eq=False)
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros(cls, params: ModelParams | dict[str, np.ndarray]) -> "OptimizerState":
        t = params.tensors() if isinstance(params, ModelParams) else params
        return cls({k: np.zeros_like(a) for k, a in t.items()},
                   {k: np.zeros_like(a) for k, a in t.items()}, 0)


def adam_update(
    tensors: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    config: ModelConfig,
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One bias-corrected Adam step over a dict of arrays; inputs are left untouched."""
    if set(grads) != set(tensors) or set(state.m) != set(tensors):
        raise ShapeMismatch("gradient / state keys do not match parameters")
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate
    t = state.t + 1
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new, new_m, new_v = {}, {}, {}
    for name, theta in tensors.items():
        g = np.asarray(grads[name], dtype=np.float64)
        theta = np.asarray(theta, dtype=np.float64)
        if g.shape != theta.shape or state.m[name].shape != theta.shape:
            raise ShapeMismatch(f"{name}: gradient {g.shape} vs parameter {theta.shape}")
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        new[name] = theta - lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
        new_m[name] = m
        new_v[name] = v
    return new, OptimizerState(new_m, new_v, t)


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    config: ModelConfig | None = None,
) -> tuple[ModelParams, OptimizerState]:
    new, state = adam_update(params.tensors(), grads, state, config or params.config)
    return ModelParams.from_tensors(params.config, new), state
