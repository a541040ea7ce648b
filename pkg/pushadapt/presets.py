"""
Готовые синтетические эксперименты: пара (офлайн-сцена, онлайн-сцена).

Каждый пресет — аналог одного семейства экспериментов со сдвигом распределения:
другой коэффициент трения, смещённый центр масс, другой размер объекта,
другая сторона толчка или всё сразу.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import ConfigError
from .simulator import SceneConfig, SuiteManifest, generate_suite, sample_scripts

logger = logging.getLogger(__name__)

OFFLINE_TRAJECTORIES = 50
ONLINE_TRAJECTORIES = 20
PUSH_STEPS = 60

BASE_SCENE = SceneConfig(
    box_half_extents=(0.05, 0.04),
    robot_radius=0.02,
    true_v=(0.0, 0.0),
    true_h=0.05,
    noise_std_pos=1e-4,
    noise_std_rot=1e-3,
    step_length=0.004,
)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    offline_scene: SceneConfig = BASE_SCENE
    online_scene: SceneConfig = BASE_SCENE
    offline_side: str = "front"
    online_side: str = "front"


PRESETS: dict[str, ExperimentPreset] = {
    preset.name: preset
    for preset in (
        ExperimentPreset("in_distribution", "те же объект, поверхность, COM и сторона"),
        ExperimentPreset("friction_shift", "другая поверхность (h* = 0.03)",
                         online_scene=replace(BASE_SCENE, true_h=0.03)),
        ExperimentPreset("com_shift", "центр масс смещён на (0.01, 0.01) м",
                         online_scene=replace(BASE_SCENE, true_v=(0.01, 0.01))),
        ExperimentPreset("object_shift", "объект большего размера",
                         online_scene=replace(BASE_SCENE, box_half_extents=(0.07, 0.05))),
        ExperimentPreset("side_shift", "толчок с другой стороны", online_side="left"),
        ExperimentPreset("all_shift", "все сдвиги одновременно",
                         online_scene=replace(BASE_SCENE, box_half_extents=(0.07, 0.05), true_h=0.03,
                                              true_v=(0.01, 0.01)),
                         online_side="left"),
    )
}

DEFAULT_PRESET = "com_shift"


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown experiment preset {name!r}; choose one of {sorted(PRESETS)}") from None


def build_suites(preset: ExperimentPreset, out_dir, seed: int = 0,
                 offline_count: int = OFFLINE_TRAJECTORIES, online_count: int = ONLINE_TRAJECTORIES,
                 steps: int = PUSH_STEPS,
                 offline_scene: SceneConfig | None = None,
                 online_scene: SceneConfig | None = None) -> tuple[SuiteManifest, SuiteManifest]:
    """Офлайн- и онлайн-наборы пресета в out_dir/offline и out_dir/online."""
    out_dir = Path(out_dir)
    offline_scene = offline_scene or preset.offline_scene
    online_scene = online_scene or preset.online_scene
    offline_scripts = sample_scripts(offline_count, seed, offline_scene, preset.offline_side, steps)
    online_scripts = sample_scripts(online_count, seed + 1, online_scene, preset.online_side, steps)
    offline = generate_suite([offline_scene], offline_scripts, out_dir / "offline", seed, name="offline")
    online = generate_suite([online_scene], online_scripts, out_dir / "online", seed + 1, name="online")
    logger.info("preset %s: %d offline and %d online trajectories", preset.name, len(offline), len(online))
    return offline, online
