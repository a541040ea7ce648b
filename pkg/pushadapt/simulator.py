"""
Синтетический генератор толчков.

Робот-диск толкает прямоугольный объект в квазистатической модели
(те же уравнения, что в physics) с заданными истинными v* и h*.
Контакт — ближайшая точка границы прямоугольника, прилипание (u_c = u_r^o).
Шум добавляется только к записанным позам объекта: динамика идёт без шума.
"""
from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Trajectory, TrajectoryStep, load_trajectories, save_trajectories
from .exceptions import SceneConfigError
from .geometry import ObjectPose, rotate, to_object_frame, wrap_angle, outcome_to_world_frame
from .physics import ContactState, correct_output_motion, physical_push_arrays

logger = logging.getLogger(__name__)

CONTACT_TOL = 1e-9
MANIFEST_FORMAT = "pushadapt-suite"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

# Сторона толчка: (внутренняя нормаль грани, ось смещения вдоль грани)
SIDES = {
    "front": ((0.0, 1.0), 0),
    "back": ((0.0, -1.0), 0),
    "left": ((1.0, 0.0), 1),
    "right": ((-1.0, 0.0), 1),
}


@dataclass(frozen=True)
class SceneConfig:
    """Параметры сцены; true_v/true_h — истинные смещение COM и параметр трения."""

    box_half_extents: tuple[float, float] = (0.05, 0.04)
    robot_radius: float = 0.02
    true_v: tuple[float, float] = (0.0, 0.0)
    true_h: float = 0.05
    noise_std_pos: float = 0.0
    noise_std_rot: float = 0.0
    step_length: float = 0.004
    seed: int = 0
    slip_noise: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "box_half_extents", tuple(float(x) for x in self.box_half_extents))
        object.__setattr__(self, "true_v", tuple(float(x) for x in self.true_v))
        values = (*self.box_half_extents, *self.true_v, self.robot_radius, self.true_h,
                  self.noise_std_pos, self.noise_std_rot, self.step_length, self.slip_noise)
        if not all(math.isfinite(x) for x in values):
            raise SceneConfigError("scene parameters must be finite")
        if min(self.box_half_extents) <= 0:
            raise SceneConfigError(f"box half extents must be positive, got {self.box_half_extents}")
        if self.robot_radius <= 0 or self.true_h <= 0 or self.step_length <= 0:
            raise SceneConfigError("robot_radius, true_h and step_length must be positive")
        if self.noise_std_pos < 0 or self.noise_std_rot < 0:
            raise SceneConfigError("noise levels must be non-negative")
        if not 0.0 <= self.slip_noise <= 1.0:
            raise SceneConfigError(f"slip_noise must lie in [0, 1], got {self.slip_noise}")
        # без туннелирования: шаг меньше половины радиуса робота
        if self.step_length >= self.robot_radius / 2:
            raise SceneConfigError(
                f"step_length {self.step_length} must be below robot_radius/2 = {self.robot_radius / 2}")

    @property
    def half(self) -> np.ndarray:
        return np.array(self.box_half_extents)

    @property
    def v(self) -> np.ndarray:
        return np.array(self.true_v)

    @classmethod
    def from_dict(cls, data: dict) -> SceneConfig:
        return cls(**data)


@dataclass(frozen=True)
class PushScript:
    """
    Прямой толчок: сторона, смещение точки старта вдоль грани (м), угол подхода
    к внутренней нормали (рад), число шагов. standoff — начальный зазор (м),
    heading — начальная ориентация объекта в мире.
    """

    side: str = "front"
    offset: float = 0.0
    angle: float = 0.0
    steps: int = 60
    standoff: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        if self.side not in SIDES:
            raise SceneConfigError(f"unknown side {self.side!r}; expected one of {sorted(SIDES)}")
        if self.steps < 2:
            raise SceneConfigError(f"a push script needs at least 2 steps, got {self.steps}")
        if not all(math.isfinite(x) for x in (self.offset, self.angle, self.standoff, self.heading)):
            raise SceneConfigError("push script parameters must be finite")
        if self.standoff < 0:
            raise SceneConfigError("standoff must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> PushScript:
        return cls(**data)


# =========================
# Контакт
# =========================

def closest_boundary_point(q: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Ближайшая точка границы прямоугольника [−half, half] к точке q, внешняя нормаль, q внутри?"""
    q = np.asarray(q, dtype=float)
    inside = bool(np.all(np.abs(q) <= half))
    if not inside:
        b = np.clip(q, -half, half)
        gap = q - b
        return b, gap / np.linalg.norm(gap), False
    depth = half - np.abs(q)
    axis = int(np.argmin(depth))
    b = q.copy()
    normal = np.zeros(2)
    sign = math.copysign(1.0, q[axis])
    b[axis] = sign * half[axis]
    normal[axis] = sign
    return b, normal, True


def contact_resolve(scene: SceneConfig, object_pose: ObjectPose, robot_pos, robot_motion,
                    slip: float = 0.0) -> ContactState | None:
    """
    Контакт после движения диска на u_r^o, в системе объекта относительно истинного COM.

    Возвращает None, если диск не достаёт до границы. slip ∈ [0, 1] ослабляет
    касательную составляющую u_c (по умолчанию — чистое прилипание).
    """
    p_r_o, u_r_o = to_object_frame(object_pose, robot_pos, robot_motion)
    q = p_r_o + u_r_o
    b, normal, inside = closest_boundary_point(q, scene.half)
    if not inside and np.linalg.norm(q - b) > scene.robot_radius + CONTACT_TOL:
        return None
    u_c = u_r_o.copy()
    if slip:
        normal_part = np.dot(u_c, normal) * normal
        u_c = normal_part + (1.0 - slip) * (u_c - normal_part)
    # COM лежит в −v в системе объекта
    return ContactState(c=b + scene.v, u_c=u_c)


def _project_out(scene: SceneConfig, pose: ObjectPose, robot_pos: np.ndarray) -> np.ndarray:
    """Выталкивает диск из прямоугольника вдоль нормали контакта."""
    p_r_o, _ = to_object_frame(pose, robot_pos, np.zeros(2))
    b, normal, inside = closest_boundary_point(p_r_o, scene.half)
    if not inside and np.linalg.norm(p_r_o - b) >= scene.robot_radius:
        return robot_pos
    moved = b + normal * scene.robot_radius
    return np.asarray(pose.position) + rotate(pose.orientation, moved)


def script_start(scene: SceneConfig, script: PushScript) -> tuple[ObjectPose, np.ndarray, np.ndarray]:
    """Начальная поза объекта, положение робота и команда движения за шаг (в мире)."""
    inward, axis = SIDES[script.side]
    inward = np.array(inward)
    half = scene.half
    tangent_extent = half[axis]
    if abs(script.offset) > tangent_extent:
        raise SceneConfigError(f"offset {script.offset} lies outside the {script.side} face")
    face_point = -inward * half
    face_point[axis] = script.offset
    start = face_point - inward * (scene.robot_radius + script.standoff)
    direction = rotate(script.angle, inward)

    pose = ObjectPose(np.zeros(2), float(wrap_angle(script.heading)))
    robot = rotate(pose.orientation, start)
    motion = scene.step_length * rotate(pose.orientation, direction)
    return pose, robot, motion


def simulate_push(scene: SceneConfig, script: PushScript, traj_id: str = "traj",
                  metadata: dict[str, str] | None = None) -> Trajectory:
    """Прямой толчок по сценарию; детерминирован при фиксированном scene.seed."""
    rng = np.random.default_rng(scene.seed)
    pos_noise = scene.noise_std_pos * rng.standard_normal((script.steps, 2))
    rot_noise = scene.noise_std_rot * rng.standard_normal(script.steps)
    slips = scene.slip_noise * rng.uniform(0.0, 1.0, script.steps)

    pose, robot, motion = script_start(scene, script)
    steps = []
    contacts = 0
    for k in range(script.steps):
        recorded = ObjectPose(pose.position + pos_noise[k], float(wrap_angle(pose.orientation + rot_noise[k])))
        steps.append(TrajectoryStep(k, recorded, robot.copy(), motion.copy()))
        if k == script.steps - 1:
            break
        contact = contact_resolve(scene, pose, robot, motion, slip=float(slips[k]))
        if contact is not None:
            contacts += 1
            d_com, d_omega = physical_push_arrays(contact.c, contact.u_c, scene.true_h)
            dp_o = correct_output_motion(d_com, d_omega, scene.v)
            pose = outcome_to_world_frame(pose, dp_o, d_omega)
        robot = _project_out(scene, pose, robot + motion)

    if contacts == 0:
        logger.warning("trajectory %s never touched the object", traj_id)
    meta = {
        "object": "box {:.3f}x{:.3f}".format(*(2 * scene.half)),
        "surface": f"h={scene.true_h:g}",
        "com": "center" if not np.any(scene.v) else "offset({:g},{:g})".format(*scene.true_v),
        "side": script.side,
    }
    meta.update(metadata or {})
    return Trajectory(traj_id, steps, meta)


# =========================
# Наборы траекторий
# =========================

def derive_seed(master_seed: int, index: int) -> int:
    """Сид траектории из (master_seed, index); не зависит от порядка генерации."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def sample_scripts(count: int, seed: int, scene: SceneConfig, side: str = "front", steps: int = 60,
                   max_angle: float = 0.3) -> list[PushScript]:
    """Разные точки и углы толчка (и начальные ориентации объекта) для одной стороны."""
    _, axis = SIDES[side]
    tangent_extent = scene.half[axis]
    rng = np.random.default_rng(seed)
    scripts = []
    for _ in range(count):
        scripts.append(PushScript(
            side=side,
            offset=float(rng.uniform(-0.6, 0.6) * tangent_extent),
            angle=float(rng.uniform(-max_angle, max_angle)),
            steps=steps,
            standoff=float(rng.uniform(0.0, 3.0) * scene.step_length),
            heading=float(rng.uniform(-math.pi, math.pi)),
        ))
    return scripts


@dataclass
class SuiteManifest:
    """Манифест набора: файл → полное происхождение (сцена, сценарий)."""

    name: str
    master_seed: int
    entries: dict[str, dict] = field(default_factory=dict)
    root: Path | None = None

    def to_json(self) -> str:
        document = {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "name": self.name,
            "master_seed": self.master_seed,
            "trajectories": self.entries,
        }
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    def __len__(self) -> int:
        return len(self.entries)

    def files(self) -> list[Path]:
        root = self.root or Path(".")
        return [root / name for name in sorted(self.entries)]


def generate_suite(variants: Sequence[SceneConfig], scripts: Sequence[PushScript], out_dir,
                   master_seed: int = 0, name: str = "suite") -> SuiteManifest:
    """
    Одна траектория на каждую пару (вариант сцены, сценарий): JSONL-файлы
    и manifest.json в out_dir.
    """
    if not variants or not scripts:
        raise SceneConfigError("generate_suite needs at least one scene variant and one script")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = SuiteManifest(name, int(master_seed), root=out_dir)
    for vi, variant in enumerate(variants):
        for si, script in enumerate(scripts):
            index = vi * len(scripts) + si
            scene = replace(variant, seed=derive_seed(master_seed, index))
            traj_id = f"{name}-{index:04d}"
            trajectory = simulate_push(scene, script, traj_id)
            file_name = f"{traj_id}.jsonl"
            save_trajectories([trajectory], out_dir / file_name)
            manifest.entries[file_name] = {
                "traj_id": traj_id,
                "scene": asdict(scene),
                "script": asdict(script),
            }
    (out_dir / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    logger.info("generated %d trajectories into %s", len(manifest), out_dir)
    return manifest


def read_manifest(path) -> SuiteManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneConfigError(f"cannot read suite manifest {path}: {exc}") from exc
    if document.get("format") != MANIFEST_FORMAT:
        raise SceneConfigError(f"{path} is not a pushadapt suite manifest")
    return SuiteManifest(document.get("name", "suite"), int(document.get("master_seed", 0)),
                         dict(document.get("trajectories", {})), root=path.parent)


def load_suite(path) -> list[Trajectory]:
    """Все траектории набора в порядке имён файлов манифеста."""
    manifest = read_manifest(path)
    trajectories = []
    for file_path in manifest.files():
        trajectories.extend(load_trajectories(file_path))
    return trajectories
