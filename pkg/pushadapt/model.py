"""
Комбинированная модель прогноза толчка f_(θoffline, θonline).

Поток данных одного прогноза:
  (a) p_r^{o,corrected} = p_r^o + v
  (b) z-нормализация (p_r^{o,corrected}, u_r^o) статистиками входов
  (c) MLP → 4 выхода в нормализованных единицах
  (d) денормализация в физические (c, u_c) теми же статистиками входов
  (e) F_physical(c, u_c; h) → (ΔCOM, Δω)
  (f) Δp_o = ΔCOM + (R_Δω − I)·v

Плюс чисто нейросетевой базовый предиктор (4 → 16 → 16 → 16 → 3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import as_planar
from .metrics import NormStats
from .nn import MlpParams, MlpTape, mlp_backward, mlp_forward
from .physics import (
    H_MIN,
    OnlineParams,
    correct_input_position,
    correct_output_motion,
    correct_output_motion_grad,
    physical_push_arrays,
    physical_push_grad_arrays,
)

# θ_online(0): v = (0, 0), h = 0.05 м
DEFAULT_H = 0.05


def default_online_params(h: float = DEFAULT_H) -> OnlineParams:
    return OnlineParams(np.zeros(2), math.log(h - H_MIN))


@dataclass(frozen=True)
class PushInput:
    """x = (p_r^o, u_r^o) в системе объекта; (2,) или батч (n, 2)."""

    p_r_o: np.ndarray
    u_r_o: np.ndarray

    def features(self) -> np.ndarray:
        return np.concatenate([as_planar(self.p_r_o), as_planar(self.u_r_o)], axis=-1)


@dataclass(frozen=True)
class PredictionOutcome:
    """(Δp_o, Δω_o) в системе объекта."""

    dp_o: np.ndarray
    dw_o: float | np.ndarray


@dataclass(frozen=True)
class CombinedModel:
    mlp: MlpParams
    online: OnlineParams
    norm: NormStats

    def with_online(self, online: OnlineParams) -> CombinedModel:
        return replace(self, online=online)


@dataclass
class CombinedTape:
    mlp_tape: MlpTape
    contact: np.ndarray    # (n, 2) c в физических единицах
    u_c: np.ndarray        # (n, 2)
    h: float
    d_com: np.ndarray      # (n, 2)
    d_omega: np.ndarray    # (n,)
    batched: bool


def online_step_scale(model: CombinedModel) -> np.ndarray:
    """
    Масштаб нормализованных координат θ_online: (σ_p_r^o,x, σ_p_r^o,y, 1).

    v складывается с p_r^o до нормализации, поэтому v/σ — сдвиг нормализованного входа.
    """
    return np.concatenate([model.norm.position_scale, [1.0]])


def combined_forward(model: CombinedModel, push: PushInput) -> tuple[PredictionOutcome, CombinedTape]:
    norm = model.norm
    v = model.online.v
    h = model.online.h
    p_r_o = as_planar(push.p_r_o)
    batched = p_r_o.ndim == 2

    corrected = correct_input_position(p_r_o, v)
    features = np.concatenate([corrected, as_planar(push.u_r_o)], axis=-1)
    z = (np.atleast_2d(features) - norm.input_mean) / norm.input_std
    out, mlp_tape = mlp_forward(model.mlp, z)
    physical = out * norm.input_std + norm.input_mean
    contact, u_c = physical[:, :2], physical[:, 2:]

    d_com, d_omega = physical_push_arrays(contact, u_c, h)
    d_omega = np.atleast_1d(d_omega)
    dp_o = correct_output_motion(d_com, d_omega, v)

    tape = CombinedTape(mlp_tape, contact, u_c, h, d_com, d_omega, batched)
    if batched:
        return PredictionOutcome(dp_o, d_omega), tape
    return PredictionOutcome(dp_o[0], float(d_omega[0])), tape


def combined_backward(model: CombinedModel, tape: CombinedTape, loss_grads) -> tuple[MlpParams, np.ndarray]:
    """
    Градиенты скалярной потери по θ_offline и θ_online = (v_x, v_y, rho).

    loss_grads = (∂ℓ/∂Δp_o, ∂ℓ/∂Δω_o). v получает вклад из обеих коррекций.
    """
    norm = model.norm
    v = model.online.v
    g_dp = np.atleast_2d(np.asarray(loss_grads[0], dtype=float))
    g_dw = np.atleast_1d(np.asarray(loss_grads[1], dtype=float))

    correction = correct_output_motion_grad(tape.d_com, tape.d_omega, v)
    g_v = np.einsum("ni,nij->j", g_dp, correction.v)
    g_omega = g_dw + np.einsum("ni,ni->n", g_dp, correction.d_omega)

    jac = physical_push_grad_arrays(tape.contact, tape.u_c, tape.h)
    g_phys_out = np.concatenate([g_dp, g_omega[:, None]], axis=-1)
    g_phys_in = np.einsum("no,noi->ni", g_phys_out, jac)
    g_rho = float(np.sum(g_phys_in[:, 4])) * model.online.dh_drho

    g_out = g_phys_in[:, :4] * norm.input_std
    grad_mlp, g_z = mlp_backward(model.mlp, tape.mlp_tape, g_out)
    g_features = g_z / norm.input_std
    g_v = g_v + g_features[:, :2].sum(axis=0)

    return grad_mlp, np.array([g_v[0], g_v[1], g_rho])


def online_jacobian(model: CombinedModel, push: PushInput) -> np.ndarray:
    """
    Якобиан одного прогноза по θ_online формы (3, 3).

    Строки — (Δp_o,x, Δp_o,y, Δω_o), столбцы — (v_x, v_y, rho).
    """
    _, tape = combined_forward(model, push)
    rows = []
    for g_dp, g_dw in (((1.0, 0.0), 0.0), ((0.0, 1.0), 0.0), ((0.0, 0.0), 1.0)):
        _, row = combined_backward(model, tape, (np.array([g_dp]), np.array([g_dw])))
        rows.append(row)
    return np.stack(rows)


# =========================
# Базовый предиктор (чистая нейросеть)
# =========================

@dataclass(frozen=True)
class BaselineModel:
    mlp: MlpParams
    norm: NormStats


def _baseline_output_scale(norm: NormStats) -> tuple[np.ndarray, np.ndarray]:
    scale = np.array([norm.dp_std, norm.dp_std, norm.dw_std])
    shift = np.array([norm.dp_mean[0], norm.dp_mean[1], norm.dw_mean])
    return scale, shift


def baseline_nn_forward(params: MlpParams, norm: NormStats, push: PushInput,
                        return_tape: bool = False):
    """z-нормализация входа, MLP, денормализация трёх выходов как (Δp_o, Δω_o)."""
    features = push.features()
    batched = features.ndim == 2
    z = (np.atleast_2d(features) - norm.input_mean) / norm.input_std
    out, tape = mlp_forward(params, z)
    scale, shift = _baseline_output_scale(norm)
    physical = out * scale + shift
    if batched:
        outcome = PredictionOutcome(physical[:, :2], physical[:, 2])
    else:
        outcome = PredictionOutcome(physical[0, :2], float(physical[0, 2]))
    if return_tape:
        return outcome, tape
    return outcome


def baseline_nn_backward(params: MlpParams, norm: NormStats, tape: MlpTape, loss_grads) -> MlpParams:
    g_dp = np.atleast_2d(np.asarray(loss_grads[0], dtype=float))
    g_dw = np.atleast_1d(np.asarray(loss_grads[1], dtype=float))
    scale, _ = _baseline_output_scale(norm)
    g_out = np.concatenate([g_dp, g_dw[:, None]], axis=-1) * scale
    grads, _ = mlp_backward(params, tape, g_out)
    return grads
