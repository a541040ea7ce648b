"""
Конфигурация запуска команд.

Приоритет источников (от сильного к слабому):
  1. флаги командной строки;
  2. файл --config PATH (плоский key=value, ключи = длинные имена флагов с '_' вместо '-');
  3. окружение PUSHADAPT_* (через settings.PUSHADAPT);
  4. значения по умолчанию.

Неизвестный ключ в файле или недопустимое значение — ConfigError с именем ключа.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values
from marshmallow import RAISE, Schema, ValidationError, validate
from marshmallow import fields as mf

from .exceptions import ConfigError, SceneConfigError
from .model import DEFAULT_H
from .optim import SgdConfig
from .physics import H_MIN
from .pipeline import ExperimentConfig, OfflineConfig
from .presets import DEFAULT_PRESET, OFFLINE_TRAJECTORIES, ONLINE_TRAJECTORIES, PRESETS, PUSH_STEPS, ExperimentPreset
from .simulator import SceneConfig

logger = logging.getLogger(__name__)

# Параметры робота и датчиков — общие для обеих сцен пресета
SHARED_SCENE_KEYS = ("robot_radius", "noise_std_pos", "noise_std_rot", "step_length", "slip_noise")
# Параметры объекта — только для онлайн-сцены (сдвинутое распределение)
ONLINE_SCENE_KEYS = ("box_half_x", "box_half_y", "true_v_x", "true_v_y", "true_h")


def _positive():
    return validate.Range(min=0, min_inclusive=False)


def _non_negative():
    return validate.Range(min=0)


class RunConfigSchema(Schema):
    class Meta:
        unknown = RAISE

    # пути и метки
    data_dir = mf.String()
    out_dir = mf.String()
    checkpoint = mf.String(allow_none=True)
    experiment = mf.String(validate=validate.Length(min=1))
    preset = mf.String(validate=validate.OneOf(sorted(PRESETS)))
    seed = mf.Integer(validate=_non_negative())
    record = mf.Boolean()

    # офлайн-обучение
    epochs = mf.Integer(validate=_non_negative())
    batch_size = mf.Integer(validate=validate.Range(min=1))
    lr = mf.Float(validate=_positive())
    shuffle = mf.Boolean()
    train_online_params = mf.Boolean()
    train_baseline = mf.Boolean()
    clip_norm = mf.Float(allow_none=True, validate=_positive())
    log_every = mf.Integer(validate=_non_negative())

    # онлайн-адаптация
    online_lr = mf.Float(validate=_non_negative())
    online_steps = mf.Integer(validate=validate.Range(min=1))
    reset_per_trajectory = mf.Boolean()
    horizon = mf.Integer(validate=validate.Range(min=1))
    initial_h = mf.Float(validate=validate.Range(min=H_MIN, min_inclusive=False))

    # сцена и наборы
    box_half_x = mf.Float(allow_none=True, validate=_positive())
    box_half_y = mf.Float(allow_none=True, validate=_positive())
    robot_radius = mf.Float(allow_none=True, validate=_positive())
    true_v_x = mf.Float(allow_none=True)
    true_v_y = mf.Float(allow_none=True)
    true_h = mf.Float(allow_none=True, validate=_positive())
    noise_std_pos = mf.Float(allow_none=True, validate=_non_negative())
    noise_std_rot = mf.Float(allow_none=True, validate=_non_negative())
    step_length = mf.Float(allow_none=True, validate=_positive())
    slip_noise = mf.Float(allow_none=True, validate=validate.Range(min=0, max=1))
    offline_trajectories = mf.Integer(validate=validate.Range(min=1))
    online_trajectories = mf.Integer(validate=validate.Range(min=1))
    push_steps = mf.Integer(validate=validate.Range(min=2))


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = "data"
    out_dir: str = "out"
    checkpoint: str | None = None
    experiment: str = "experiment"
    preset: str = DEFAULT_PRESET
    seed: int = 0
    record: bool = False

    epochs: int = 200
    batch_size: int = 32
    lr: float = 0.005
    shuffle: bool = True
    train_online_params: bool = False
    train_baseline: bool = True
    clip_norm: float | None = None
    log_every: int = 20

    online_lr: float = 0.005
    online_steps: int = 5
    reset_per_trajectory: bool = False
    horizon: int = 1
    initial_h: float = DEFAULT_H

    box_half_x: float | None = None
    box_half_y: float | None = None
    robot_radius: float | None = None
    true_v_x: float | None = None
    true_v_y: float | None = None
    true_h: float | None = None
    noise_std_pos: float | None = None
    noise_std_rot: float | None = None
    step_length: float | None = None
    slip_noise: float | None = None
    offline_trajectories: int = OFFLINE_TRAJECTORIES
    online_trajectories: int = ONLINE_TRAJECTORIES
    push_steps: int = PUSH_STEPS

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def offline_config(self) -> OfflineConfig:
        return OfflineConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            shuffle=self.shuffle,
            train_online_params_offline=self.train_online_params,
            clip_norm=self.clip_norm,
            log_every=self.log_every,
        )

    def sgd_config(self) -> SgdConfig:
        return SgdConfig(lr=self.online_lr, steps_per_update=self.online_steps, clip_norm=self.clip_norm)

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            name=self.experiment,
            offline=self.offline_config(),
            sgd=self.sgd_config(),
            horizon=self.horizon,
            reset_per_trajectory=self.reset_per_trajectory,
            train_baseline=self.train_baseline,
            initial_h=self.initial_h,
        )

    def scenes(self, preset: ExperimentPreset) -> tuple[SceneConfig, SceneConfig]:
        """Сцены пресета с переопределениями из конфигурации."""
        shared = {key: getattr(self, key) for key in SHARED_SCENE_KEYS if getattr(self, key) is not None}
        online = dict(shared)
        base = preset.online_scene
        if self.box_half_x is not None or self.box_half_y is not None:
            online["box_half_extents"] = (
                self.box_half_x if self.box_half_x is not None else base.box_half_extents[0],
                self.box_half_y if self.box_half_y is not None else base.box_half_extents[1],
            )
        if self.true_v_x is not None or self.true_v_y is not None:
            online["true_v"] = (
                self.true_v_x if self.true_v_x is not None else base.true_v[0],
                self.true_v_y if self.true_v_y is not None else base.true_v[1],
            )
        if self.true_h is not None:
            online["true_h"] = self.true_h
        try:
            return replace(preset.offline_scene, **shared), replace(base, **online)
        except SceneConfigError as exc:
            raise ConfigError(f"invalid scene configuration: {exc}") from exc


def _settings_layer() -> dict:
    """Значения из settings.PUSHADAPT (окружение PUSHADAPT_*)."""
    configured = getattr(settings, "PUSHADAPT", {})
    mapping = {"DATA_DIR": "data_dir", "OUT_DIR": "out_dir", "SEED": "seed", "RECORD_RUNS": "record"}
    return {key: configured[name] for name, key in mapping.items() if configured.get(name) is not None}


def read_config_file(path) -> dict:
    """key=value файл в синтаксисе dotenv; пустое значение означает «не задано»."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    values = dotenv_values(path)
    known = RunConfigSchema().fields
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r} in {path}")
    return {key: value for key, value in values.items() if value not in (None, "")}


def _first_error(messages: dict) -> tuple[str, str]:
    key, errors = next(iter(messages.items()))
    if isinstance(errors, (list, tuple)):
        errors = "; ".join(str(e) for e in errors)
    return key, str(errors)


def resolve_config(options: dict | None = None, config_path=None) -> RunConfig:
    """Слияние источников по приоритету и проверка схемой."""
    merged = _settings_layer()
    if config_path:
        merged.update(read_config_file(config_path))
    known = RunConfigSchema().fields
    for key, value in (options or {}).items():
        if key in known and value is not None:
            merged[key] = value
    try:
        data = RunConfigSchema().load(merged)
    except ValidationError as exc:
        key, message = _first_error(exc.normalized_messages())
        raise ConfigError(f"invalid configuration value for {key!r}: {message}") from exc
    config = RunConfig(**data)
    logger.debug("resolved configuration: %s", config.as_dict())
    return config
