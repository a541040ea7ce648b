"""
Небольшая полносвязная сеть φ_θoffline с точным обратным проходом.

Архитектура: 4 входа → три скрытых слоя по 16 ReLU → линейный выход
(4 выхода для комбинированной модели: (c, u_c); 3 — для чисто нейросетевого
базового предиктора: (Δp_o, Δω_o)). Всё считается в нормализованных единицах.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INPUT_DIM = 4
HIDDEN_DIMS = (16, 16, 16)
CONTACT_OUTPUT_DIM = 4
BASELINE_OUTPUT_DIM = 3


@dataclass
class LayerParams:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray   # (out_dim,)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


@dataclass
class MlpParams:
    """θ_offline: упорядоченный список слоёв, последний — линейная голова."""

    layers: list[LayerParams]

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].weights.shape[1],) + tuple(layer.weights.shape[0] for layer in self.layers)

    @property
    def parameter_count(self) -> int:
        return sum(layer.weights.size + layer.biases.size for layer in self.layers)

    def named_arrays(self) -> dict[str, np.ndarray]:
        arrays = {}
        for index, layer in enumerate(self.layers):
            arrays[f"layer{index}.weights"] = layer.weights
            arrays[f"layer{index}.biases"] = layer.biases
        return arrays

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.concatenate([layer.weights.ravel(), layer.biases]) for layer in self.layers])

    def from_vector(self, theta) -> MlpParams:
        """Новый набор параметров той же формы из плоского вектора."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.parameter_count,):
            raise ValueError(f"expected {self.parameter_count} parameters, got shape {theta.shape}")
        layers = []
        offset = 0
        for layer in self.layers:
            n_w = layer.weights.size
            n_b = layer.biases.size
            weights = theta[offset:offset + n_w].reshape(layer.weights.shape).copy()
            offset += n_w
            biases = theta[offset:offset + n_b].copy()
            offset += n_b
            layers.append(LayerParams(weights, biases))
        return MlpParams(layers)

    def zeros_like(self) -> MlpParams:
        return MlpParams([LayerParams(np.zeros_like(layer.weights), np.zeros_like(layer.biases)) for layer in self.layers])

    def copy(self) -> MlpParams:
        return MlpParams([LayerParams(layer.weights.copy(), layer.biases.copy()) for layer in self.layers])


@dataclass
class MlpTape:
    """Кэш прямого прохода: входы слоёв и преактивации."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre_activations: list[np.ndarray] = field(default_factory=list)
    batched: bool = True


def mlp_init(seed: int, input_dim: int = INPUT_DIM, output_dim: int = CONTACT_OUTPUT_DIM,
             hidden_dims: tuple[int, ...] = HIDDEN_DIMS) -> MlpParams:
    """Glorot-uniform веса U(−a, a), a = sqrt(6/(fan_in + fan_out)); нулевые смещения."""
    rng = np.random.default_rng(seed)
    dims = (input_dim,) + tuple(hidden_dims) + (output_dim,)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(LayerParams(weights, np.zeros(fan_out)))
    return MlpParams(layers)


def mlp_forward(params: MlpParams, inputs) -> tuple[np.ndarray, MlpTape]:
    """
    Прямой проход. inputs — вектор (in_dim,) или батч (n, in_dim);
    выход той же ведущей формы.
    """
    x = np.asarray(inputs, dtype=float)
    batched = x.ndim == 2
    activation = np.atleast_2d(x)
    tape = MlpTape(batched=batched)
    last = len(params.layers) - 1
    for index, layer in enumerate(params.layers):
        tape.inputs.append(activation)
        z = activation @ layer.weights.T + layer.biases
        tape.pre_activations.append(z)
        activation = z if index == last else np.maximum(z, 0.0)
    output = activation if batched else activation[0]
    return output, tape


def mlp_backward(params: MlpParams, tape: MlpTape, output_grad) -> tuple[MlpParams, np.ndarray]:
    """
    Обратный проход для скаляра output_gradᵀ·output.

    Градиенты по параметрам суммируются по батчу. Производная ReLU в нуле — 0.
    """
    grad = np.atleast_2d(np.asarray(output_grad, dtype=float))
    layer_grads = [None] * len(params.layers)
    for index in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[index]
        layer_grads[index] = LayerParams(grad.T @ tape.inputs[index], grad.sum(axis=0))
        grad = grad @ layer.weights
        if index > 0:
            grad = grad * (tape.pre_activations[index - 1] > 0.0)
    input_grad = grad if tape.batched else grad[0]
    return MlpParams(layer_grads), input_grad
