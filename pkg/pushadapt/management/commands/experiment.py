from dataclasses import replace
from pathlib import Path

from ...config import RunConfig
from ...pipeline import run_experiment
from ...plotting import write_loss_plots
from ...presets import build_suites, get_preset
from ..base import PushAdaptCommand, add_offline_arguments, add_online_arguments, add_scene_arguments


class Command(PushAdaptCommand):
    help = "Полный эксперимент: генерация наборов пресета, офлайн-обучение, онлайн-адаптация, графики."
    run_kind = "experiment"

    def add_command_arguments(self, parser):
        parser.add_argument("--horizon", type=int, default=None, help="Горизонт прогноза в шагах (по умолчанию 1).")
        add_scene_arguments(parser)
        add_offline_arguments(parser)
        add_online_arguments(parser)

    def execute_run(self, config, options):
        out_dir = self.out_dir(config)
        preset = get_preset(config.preset)
        offline_scene, online_scene = config.scenes(preset)
        offline, online = build_suites(
            preset, out_dir / "data", config.seed,
            offline_count=config.offline_trajectories,
            online_count=config.online_trajectories,
            steps=config.push_steps,
            offline_scene=offline_scene,
            online_scene=online_scene,
        )
        experiment = config.experiment_config()
        if config.experiment == RunConfig.experiment:
            experiment = replace(experiment, name=preset.name)
        artifacts = run_experiment(offline.root, online.root, experiment, out_dir)

        write_loss_plots(artifacts.paths["losses"], out_dir / "plots",
                         offline_loss=artifacts.training.offline_losses)

        result = artifacts.result
        scores = dict(artifacts.training.checkpoint.scores)
        scores.update(result.summary())
        self.record_run(config, out_dir, scores, steps=len(result),
                        digest=artifacts.training.checkpoint.config_hash)
        for series, (pos, rot) in scores.items():
            self.stdout.write(f"{series}: NMSE pos {pos:.4f}, rot {rot:.4f}")
        self.success(f"experiment {experiment.name} written to {Path(out_dir)}")
