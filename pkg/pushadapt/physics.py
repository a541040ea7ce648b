"""
Аналитическое ядро: квазистатическая модель толчка и коррекции центра масс.

F_physical(c, u_c; h) -> (ΔCOM, Δω) для толчка в точке контакта c (относительно
центра масс) движением u_c и параметра трения h. Коррекции:
  вход:  p_r^{o,corrected} = p_r^o + v
  выход: Δp_o = ΔCOM + (R_Δω − I)·v
Все производные — в замкнутой форме, векторизованы по ведущим осям.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import PhysicsDomainError
from .geometry import as_planar, rotate, rotation_matrix, rotation_matrix_derivative

# Нижняя граница h: h = H_MIN + exp(rho) > 0 при любом rho
H_MIN = 1e-3

# Порядок входов якобиана physical_push_grad
PUSH_GRAD_INPUTS = ("c_x", "c_y", "u_c_x", "u_c_y", "h")
PUSH_GRAD_OUTPUTS = ("d_com_x", "d_com_y", "d_omega")


@dataclass(frozen=True)
class OnlineParams:
    """
    θ_online = (v, h): смещение центра масс v (м, p_o − COM в системе объекта)
    и параметр трения h, хранимый как rho: h = H_MIN + exp(rho).
    """

    v: np.ndarray
    rho: float

    @property
    def h(self) -> float:
        return H_MIN + math.exp(self.rho)

    @property
    def dh_drho(self) -> float:
        return math.exp(self.rho)

    @classmethod
    def from_h(cls, v, h: float) -> OnlineParams:
        if not h > H_MIN:
            raise PhysicsDomainError(f"h must exceed {H_MIN}, got {h}")
        return cls(np.array(v, dtype=float).reshape(2), math.log(h - H_MIN))

    @classmethod
    def from_vector(cls, theta) -> OnlineParams:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (3,):
            raise ValueError(f"online parameter vector must have shape (3,), got {theta.shape}")
        return cls(theta[:2].copy(), float(theta[2]))

    def to_vector(self) -> np.ndarray:
        return np.array([self.v[0], self.v[1], self.rho], dtype=float)


@dataclass(frozen=True)
class ContactState:
    """Точка контакта c (м, относительно COM) и её движение u_c (м/шаг)."""

    c: np.ndarray
    u_c: np.ndarray


@dataclass(frozen=True)
class PhysicalOutcome:
    d_com: np.ndarray
    d_omega: float | np.ndarray


def _check_h(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise PhysicsDomainError(f"friction parameter h must be positive, got {h}")
    return h


def _push_terms(c, u_c, h):
    c = as_planar(c)
    u_c = as_planar(u_c)
    h = _check_h(h)
    cx, cy = c[..., 0], c[..., 1]
    ux, uy = u_c[..., 0], u_c[..., 1]
    h2 = h * h
    denom = h2 + cx * cx + cy * cy
    num_x = (h2 + cx * cx) * ux + cx * cy * uy
    num_y = (h2 + cy * cy) * uy + cx * cy * ux
    return cx, cy, ux, uy, h, h2, denom, num_x, num_y


def physical_push(contact: ContactState, h) -> PhysicalOutcome:
    """Квазистатическая модель толчка (ΔCOM, Δω); Δω не приводится к (−π, π]."""
    d_com, d_omega = physical_push_arrays(contact.c, contact.u_c, h)
    return PhysicalOutcome(d_com, d_omega)


def physical_push_arrays(c, u_c, h):
    cx, cy, ux, uy, _, _, denom, num_x, num_y = _push_terms(c, u_c, h)
    dx = num_x / denom
    dy = num_y / denom
    # (cx·Δy − cy·Δx)/h² после сокращения h²: ровно 0 при u_c ∥ c
    d_omega = (cx * uy - cy * ux) / denom
    d_com = np.stack([dx, dy], axis=-1)
    if np.ndim(d_omega) == 0:
        d_omega = float(d_omega)
    return d_com, d_omega


def physical_push_grad(contact: ContactState, h) -> np.ndarray:
    """
    Полный якобиан physical_push формы (..., 3, 5).

    Строки — (ΔCOM_x, ΔCOM_y, Δω), столбцы — (c_x, c_y, u_c_x, u_c_y, h).
    """
    return physical_push_grad_arrays(contact.c, contact.u_c, h)


def physical_push_grad_arrays(c, u_c, h) -> np.ndarray:
    cx, cy, ux, uy, h, h2, denom, num_x, num_y = _push_terms(c, u_c, h)
    d2 = denom * denom

    dx_dcx = (2.0 * cx * ux + cy * uy) / denom - num_x * 2.0 * cx / d2
    dx_dcy = (cx * uy) / denom - num_x * 2.0 * cy / d2
    dx_dux = (h2 + cx * cx) / denom
    dx_duy = (cx * cy) / denom
    dx_dh = 2.0 * h * ux / denom - num_x * 2.0 * h / d2

    dy_dcx = (cy * ux) / denom - num_y * 2.0 * cx / d2
    dy_dcy = (2.0 * cy * uy + cx * ux) / denom - num_y * 2.0 * cy / d2
    dy_dux = (cx * cy) / denom
    dy_duy = (h2 + cy * cy) / denom
    dy_dh = 2.0 * h * uy / denom - num_y * 2.0 * h / d2

    cross = cx * uy - cy * ux
    dw_dcx = uy / denom - cross * 2.0 * cx / d2
    dw_dcy = -ux / denom - cross * 2.0 * cy / d2
    dw_dux = -cy / denom
    dw_duy = cx / denom
    dw_dh = -cross * 2.0 * h / d2

    rows = [
        np.stack([dx_dcx, dx_dcy, dx_dux, dx_duy, dx_dh], axis=-1),
        np.stack([dy_dcx, dy_dcy, dy_dux, dy_duy, dy_dh], axis=-1),
        np.stack([dw_dcx, dw_dcy, dw_dux, dw_duy, dw_dh], axis=-1),
    ]
    return np.stack(rows, axis=-2)


# =========================
# Коррекции центра масс
# =========================

def correct_input_position(p_r_o, v) -> np.ndarray:
    """Положение робота относительно COM: p_r^o + v."""
    return as_planar(p_r_o) + as_planar(v)


def correct_output_motion(d_com, d_omega, v) -> np.ndarray:
    """Смещение центра объекта: ΔCOM + (R_Δω − I)·v."""
    v = as_planar(v)
    return as_planar(d_com) + rotate(d_omega, v) - v


@dataclass(frozen=True)
class CorrectionJacobian:
    """Частные производные Δp_o = ΔCOM + (R_Δω − I)·v."""

    d_com: np.ndarray    # (..., 2, 2), всегда единичная
    d_omega: np.ndarray  # (..., 2) = R'_Δω·v
    v: np.ndarray        # (..., 2, 2) = R_Δω − I


def correct_output_motion_grad(d_com, d_omega, v) -> CorrectionJacobian:
    d_com = as_planar(d_com)
    v = as_planar(v)
    d_omega = np.asarray(d_omega, dtype=float)
    batch = np.broadcast_shapes(d_com.shape[:-1], d_omega.shape, v.shape[:-1])
    rot = rotation_matrix(d_omega)
    eye = np.eye(2)
    wrt_v = np.broadcast_to(rot - eye, batch + (2, 2)).copy()
    wrt_omega = np.einsum("...ij,...j->...i", rotation_matrix_derivative(d_omega), v)
    wrt_omega = np.broadcast_to(wrt_omega, batch + (2,)).copy()
    wrt_com = np.broadcast_to(eye, batch + (2, 2)).copy()
    return CorrectionJacobian(d_com=wrt_com, d_omega=wrt_omega, v=wrt_v)
