"""
Оптимизаторы: Adam (офлайн-обучение) и несколько шагов градиентного спуска
на одном образце (онлайн-адаптация θ_online).

Параметры — плоские numpy-векторы; упаковка/распаковка — забота вызывающего кода.
"""
from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import OptimizerShapeError

logger = logging.getLogger(__name__)


def clip_by_norm(grads: np.ndarray, clip_norm: float | None) -> np.ndarray:
    if clip_norm is None:
        return grads
    norm = float(np.linalg.norm(grads))
    if norm > clip_norm:
        logger.debug("clipping gradient norm %.4g to %.4g", norm, clip_norm)
        return grads * (clip_norm / norm)
    return grads


@dataclass(frozen=True)
class AdamState:
    """Моменты Adam, счётчик шагов и гиперпараметры."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None

    @classmethod
    def for_params(cls, params: np.ndarray, **hyper) -> AdamState:
        params = np.asarray(params, dtype=float)
        return cls(np.zeros_like(params), np.zeros_like(params), **hyper)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> tuple[np.ndarray, AdamState]:
    """Один шаг Adam с поправкой смещения моментов."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise OptimizerShapeError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    grads = clip_by_norm(grads, state.clip_norm)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    updated = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class SgdConfig:
    """Онлайн-обновление: steps_per_update шагов GD с шагом lr на одном образце."""

    lr: float = 0.005
    steps_per_update: int = 5
    clip_norm: float | None = field(default=None)

    def __post_init__(self):
        # lr = 0 допустим: это «адаптация выключена»
        if not self.lr >= 0:
            raise ValueError(f"lr must be non-negative, got {self.lr}")
        if self.steps_per_update < 1:
            raise ValueError(f"steps_per_update must be >= 1, got {self.steps_per_update}")


def sgd_steps(config: SgdConfig, params: np.ndarray, grad_fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    Ровно steps_per_update итераций params ← params − lr·∇ℓ(params);
    градиент пересчитывается на каждом шаге на том же образце.
    """
    params = np.array(params, dtype=float)
    for _ in range(config.steps_per_update):
        grads = np.asarray(grad_fn(params), dtype=float)
        if grads.shape != params.shape:
            raise OptimizerShapeError(f"gradient shape {grads.shape} != parameter shape {params.shape}")
        params = params - config.lr * clip_by_norm(grads, config.clip_norm)
    return params
