from pathlib import Path

from ...presets import build_suites, get_preset
from ..base import PushAdaptCommand, add_scene_arguments


class Command(PushAdaptCommand):
    help = "Генерирует офлайн- и онлайн-наборы синтетических толчков (JSONL + manifest.json)."
    run_kind = "simulate"

    def add_command_arguments(self, parser):
        add_scene_arguments(parser)

    def execute_run(self, config, options):
        preset = get_preset(config.preset)
        offline_scene, online_scene = config.scenes(preset)
        out_dir = Path(options["out_dir"] or config.data_dir)
        offline, online = build_suites(
            preset, out_dir, config.seed,
            offline_count=config.offline_trajectories,
            online_count=config.online_trajectories,
            steps=config.push_steps,
            offline_scene=offline_scene,
            online_scene=online_scene,
        )
        self.record_run(config, out_dir)
        self.success(f"{len(offline)} offline and {len(online)} online trajectories written to {out_dir}")
