"""
Нормированные потери и NMSE.

ℓ_pos,i = (Δ̂p_i − Δp_i)² / σ²_Δp  (i = x, y; одно общее σ_Δp для обеих компонент)
ℓ_rot   = (Δ̂ω − Δω)² / σ²_Δω
ℓ       = ℓ_pos,x + ℓ_pos,y + ℓ_rot
NMSE_pos = ½·E[ℓ_pos,x + ℓ_pos,y],  NMSE_rot = E[ℓ_rot]
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError

INPUT_NAMES = ("p_r_o.x", "p_r_o.y", "u_r_o.x", "u_r_o.y")


@dataclass(frozen=True)
class NormStats:
    """
    Статистики нормализации (среднее/σ) входов и выходов модели.

    Считаются на офлайн-выборке и дальше не меняются: онлайн-фаза использует их же.
    """

    input_mean: np.ndarray  # (4,): p_r^o (2), u_r^o (2)
    input_std: np.ndarray   # (4,)
    dp_mean: np.ndarray     # (2,)
    dp_std: float           # общее σ для Δp_o,x и Δp_o,y
    dw_mean: float
    dw_std: float

    def __post_init__(self):
        input_std = np.asarray(self.input_std, dtype=float)
        for name, value in zip(INPUT_NAMES, input_std):
            if not value > 0:
                raise DegenerateDataError(name)
        if not self.dp_std > 0:
            raise DegenerateDataError("dp_o")
        if not self.dw_std > 0:
            raise DegenerateDataError("dw_o")

    @classmethod
    def identity(cls) -> NormStats:
        """Тождественная нормализация (нулевые средние, единичные σ)."""
        return cls(np.zeros(4), np.ones(4), np.zeros(2), 1.0, 0.0, 1.0)

    @property
    def position_scale(self) -> np.ndarray:
        return np.asarray(self.input_std[:2], dtype=float)

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {
            "input_mean": np.asarray(self.input_mean, dtype=float),
            "input_std": np.asarray(self.input_std, dtype=float),
            "dp_mean": np.asarray(self.dp_mean, dtype=float),
            "dp_std": np.array([self.dp_std]),
            "dw_mean": np.array([self.dw_mean]),
            "dw_std": np.array([self.dw_std]),
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> NormStats:
        return cls(
            input_mean=np.asarray(arrays["input_mean"], dtype=float),
            input_std=np.asarray(arrays["input_std"], dtype=float),
            dp_mean=np.asarray(arrays["dp_mean"], dtype=float),
            dp_std=float(arrays["dp_std"][0]),
            dw_mean=float(arrays["dw_mean"][0]),
            dw_std=float(arrays["dw_std"][0]),
        )


@dataclass(frozen=True)
class LossBreakdown:
    """Компоненты потери; поля — float для одного шага или массивы для серии шагов."""

    pos_x: float | np.ndarray
    pos_y: float | np.ndarray
    rot: float | np.ndarray
    total: float | np.ndarray

    @classmethod
    def stack(cls, losses: Sequence[LossBreakdown]) -> LossBreakdown:
        """Склейка последовательности (в том числе серий) в одну серию."""
        fields = []
        for name in ("pos_x", "pos_y", "rot", "total"):
            parts = [np.atleast_1d(np.asarray(getattr(loss, name), dtype=float)) for loss in losses]
            fields.append(np.concatenate(parts) if parts else np.zeros(0))
        return cls(*fields)

    def __len__(self) -> int:
        return int(np.size(self.total))

    def rows(self) -> np.ndarray:
        """Матрица (n, 4): pos_x, pos_y, rot, total."""
        return np.stack([np.atleast_1d(self.pos_x), np.atleast_1d(self.pos_y),
                         np.atleast_1d(self.rot), np.atleast_1d(self.total)], axis=-1)


def _scalar_or_array(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def step_loss(pred, actual, stats: NormStats) -> LossBreakdown:
    """Потеря ℓ на шаг; pred/actual — PredictionOutcome (поля dp_o, dw_o)."""
    err_p = np.asarray(pred.dp_o, dtype=float) - np.asarray(actual.dp_o, dtype=float)
    err_w = np.asarray(pred.dw_o, dtype=float) - np.asarray(actual.dw_o, dtype=float)
    var_p = stats.dp_std ** 2
    pos_x = err_p[..., 0] ** 2 / var_p
    pos_y = err_p[..., 1] ** 2 / var_p
    rot = err_w ** 2 / stats.dw_std ** 2
    total = pos_x + pos_y + rot
    return LossBreakdown(_scalar_or_array(pos_x), _scalar_or_array(pos_y),
                         _scalar_or_array(rot), _scalar_or_array(total))


def step_loss_grad(pred, actual, stats: NormStats) -> tuple[np.ndarray, np.ndarray]:
    """∂ℓ/∂Δ̂p_o и ∂ℓ/∂Δ̂ω_o."""
    err_p = np.asarray(pred.dp_o, dtype=float) - np.asarray(actual.dp_o, dtype=float)
    err_w = np.asarray(pred.dw_o, dtype=float) - np.asarray(actual.dw_o, dtype=float)
    return 2.0 * err_p / stats.dp_std ** 2, 2.0 * err_w / stats.dw_std ** 2


def nmse_summary(losses: Sequence[LossBreakdown] | LossBreakdown) -> tuple[float, float]:
    """(NMSE_pos, NMSE_rot) по последовательности шагов."""
    if not isinstance(losses, LossBreakdown):
        if len(losses) == 0:
            raise ValueError("nmse_summary needs at least one loss")
        losses = LossBreakdown.stack(losses)
    if len(losses) == 0:
        raise ValueError("nmse_summary needs at least one loss")
    pos = (np.atleast_1d(losses.pos_x) + np.atleast_1d(losses.pos_y)) / 2.0
    return float(np.mean(pos)), float(np.mean(np.atleast_1d(losses.rot)))


def moving_average(series, window: int = 10) -> np.ndarray:
    """
    Скользящее среднее с разогревом по доступному префиксу:
    out[i] = mean(series[max(0, i − window + 1) .. i]).
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        return values.copy()
    cumulative = np.concatenate([[0.0], np.cumsum(values)])
    index = np.arange(values.size)
    start = np.maximum(0, index - window + 1)
    return (cumulative[index + 1] - cumulative[start]) / (index + 1 - start)


def moving_std(series, window: int = 10) -> np.ndarray:
    """Скользящее (популяционное) стандартное отклонение с тем же разогревом."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=float)
    out = np.empty_like(values)
    for i in range(values.size):
        out[i] = values[max(0, i - window + 1):i + 1].std()
    return out
