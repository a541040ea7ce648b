"""
Общая основа management-команд pushadapt.

Общие флаги: --config PATH, --seed INT, --out DIR, --record/--no-record.
Доменные ошибки (PushAdaptError) превращаются в CommandError: ненулевой код
выхода и сообщение в stderr.
"""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ..checkpoints import config_hash
from ..config import RunConfig, resolve_config
from ..exceptions import PushAdaptError
from ..models import ExperimentRun

logger = logging.getLogger(__name__)


def add_data_arguments(parser, data_help: str):
    parser.add_argument("--data", default=None, help=data_help)
    parser.add_argument("--horizon", type=int, default=None, help="Горизонт прогноза в шагах (по умолчанию 1).")


def add_offline_arguments(parser):
    group = parser.add_argument_group("офлайн-обучение")
    group.add_argument("--epochs", type=int, default=None, help="Число эпох (по умолчанию 200).")
    group.add_argument("--batch-size", type=int, default=None, help="Размер мини-батча (по умолчанию 32).")
    group.add_argument("--lr", type=float, default=None, help="Шаг Adam (по умолчанию 0.005).")
    group.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None,
                       help="Перемешивать пары в каждой эпохе.")
    group.add_argument("--train-online-params", action=argparse.BooleanOptionalAction, default=None,
                       help="Обучать θ_online вместе с сетью на офлайн-данных.")
    group.add_argument("--train-baseline", action=argparse.BooleanOptionalAction, default=None,
                       help="Обучать чисто нейросетевой базовый предиктор.")
    group.add_argument("--clip-norm", type=float, default=None, help="Ограничение нормы градиента.")
    group.add_argument("--log-every", type=int, default=None, help="Логировать каждые N эпох.")
    group.add_argument("--initial-h", type=float, default=None, help="Начальное h в θ_online(0), м.")


def add_online_arguments(parser):
    group = parser.add_argument_group("онлайн-адаптация")
    group.add_argument("--online-lr", type=float, default=None, help="Шаг GD по θ_online (0 — без адаптации).")
    group.add_argument("--online-steps", type=int, default=None, help="Шагов GD на каждый образец (по умолчанию 5).")
    group.add_argument("--reset-per-trajectory", action=argparse.BooleanOptionalAction, default=None,
                       help="Сбрасывать θ_online в начале каждой траектории.")
    group.add_argument("--experiment", default=None, help="Имя эксперимента в summary.csv.")


def add_scene_arguments(parser):
    group = parser.add_argument_group("сцена")
    group.add_argument("--preset", default=None, help="Пресет эксперимента (по умолчанию com_shift).")
    group.add_argument("--offline-trajectories", type=int, default=None, help="Траекторий в офлайн-наборе.")
    group.add_argument("--online-trajectories", type=int, default=None, help="Траекторий в онлайн-наборе.")
    group.add_argument("--push-steps", type=int, default=None, help="Шагов в одном толчке.")
    for name, text in (
        ("--box-half-x", "Полуширина объекта онлайн-сцены, м."),
        ("--box-half-y", "Полудлина объекта онлайн-сцены, м."),
        ("--true-v-x", "Истинное смещение COM онлайн-сцены по x, м."),
        ("--true-v-y", "Истинное смещение COM онлайн-сцены по y, м."),
        ("--true-h", "Истинный параметр трения онлайн-сцены, м."),
        ("--robot-radius", "Радиус робота, м."),
        ("--noise-std-pos", "σ шума записанного положения, м."),
        ("--noise-std-rot", "σ шума записанной ориентации, рад."),
        ("--step-length", "Длина шага робота, м."),
        ("--slip-noise", "Доля случайного ослабления касательного движения контакта."),
    ):
        group.add_argument(name, type=float, default=None, help=text)


class PushAdaptCommand(BaseCommand):
    run_kind: str | None = None

    def add_arguments(self, parser):
        parser.add_argument("--config", default=None, help="Файл конфигурации key=value.")
        parser.add_argument("--seed", type=int, default=None, help="Главный сид.")
        parser.add_argument("--out", dest="out_dir", default=None, help="Каталог для результатов.")
        parser.add_argument("--record", action=argparse.BooleanOptionalAction, default=None,
                            help="Записать запуск в базу (см. админку).")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            config = resolve_config(options, options.get("config"))
            self.execute_run(config, options)
        except PushAdaptError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(str(exc)) from exc

    def execute_run(self, config: RunConfig, options: dict):
        raise NotImplementedError

    def out_dir(self, config: RunConfig) -> Path:
        path = Path(config.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def record_run(self, config: RunConfig, out_dir: Path, scores: dict | None = None, steps: int = 0,
                   digest: str | None = None):
        if not config.record:
            return None
        run = ExperimentRun.objects.record(
            kind=self.run_kind,
            label=config.experiment,
            seed=config.seed,
            config=config.as_dict(),
            config_hash=digest or config_hash(config.as_dict()),
            out_dir=str(out_dir),
            scores=scores,
            steps=steps,
        )
        logger.info("recorded run %s", run.pk)
        return run

    def success(self, message: str):
        self.stdout.write(self.style.SUCCESS(message))
