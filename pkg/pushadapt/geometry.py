"""
Планарная геометрия: повороты, переход в систему координат объекта и обратно.

Векторы Planar2 — numpy-массивы формы (..., 2), углы — float или массивы формы (...).
Все функции векторизованы по ведущим осям и не имеют побочных эффектов.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ObjectPose:
    """Поза объекта: центр p_o (м) и ориентация ω_o (рад)."""

    position: np.ndarray
    orientation: float | np.ndarray

    @classmethod
    def of(cls, x: float, y: float, theta: float) -> ObjectPose:
        return cls(np.array([x, y], dtype=float), float(theta))


def as_planar(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError(f"expected trailing dimension 2, got shape {arr.shape}")
    return arr


def rotation_matrix(angle) -> np.ndarray:
    """R_θ формы (..., 2, 2)."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def rotation_matrix_derivative(angle) -> np.ndarray:
    """dR_θ/dθ формы (..., 2, 2)."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return np.stack([np.stack([-s, -c], axis=-1), np.stack([c, -s], axis=-1)], axis=-2)


def rotate(angle, vec) -> np.ndarray:
    """R_θ·vec (изометрия)."""
    vec = as_planar(vec)
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    x, y = vec[..., 0], vec[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def wrap_angle(theta):
    """
    Приведение угла к (−π, π].

    theta − 2π·round(θ/2π) оставляет малые углы бит-в-бит неизменными;
    граница −π переносится в π.
    """
    theta = np.asarray(theta, dtype=float)
    wrapped = theta - TWO_PI * np.round(theta / TWO_PI)
    wrapped = np.where(wrapped <= -math.pi, wrapped + TWO_PI, wrapped)
    wrapped = np.where(wrapped > math.pi, wrapped - TWO_PI, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def to_object_frame(pose: ObjectPose, robot_pos, robot_motion) -> tuple[np.ndarray, np.ndarray]:
    """Положение и движение робота в системе объекта: (p_r^o, u_r^o)."""
    back = -np.asarray(pose.orientation, dtype=float)
    p_r_o = rotate(back, as_planar(robot_pos) - as_planar(pose.position))
    u_r_o = rotate(back, as_planar(robot_motion))
    return p_r_o, u_r_o


def robot_to_world_frame(pose: ObjectPose, p_r_o, u_r_o) -> tuple[np.ndarray, np.ndarray]:
    """Обратное к to_object_frame."""
    p_r = as_planar(pose.position) + rotate(pose.orientation, p_r_o)
    u_r = rotate(pose.orientation, u_r_o)
    return p_r, u_r


def outcome_to_object_frame(pose_t: ObjectPose, pose_t1: ObjectPose):
    """Смещение и поворот объекта за шаг в системе объекта на момент t: (Δp_o, Δω_o)."""
    back = -np.asarray(pose_t.orientation, dtype=float)
    dp_o = rotate(back, as_planar(pose_t1.position) - as_planar(pose_t.position))
    dw_o = wrap_angle(np.asarray(pose_t1.orientation, dtype=float) - np.asarray(pose_t.orientation, dtype=float))
    return dp_o, dw_o


def outcome_to_world_frame(pose_t: ObjectPose, dp_o, dw_o) -> ObjectPose:
    """Поза в момент t+1 по позе в момент t и исходу в системе объекта."""
    position = as_planar(pose_t.position) + rotate(pose_t.orientation, dp_o)
    orientation = wrap_angle(np.asarray(pose_t.orientation, dtype=float) + np.asarray(dw_o, dtype=float))
    return ObjectPose(position, orientation)
