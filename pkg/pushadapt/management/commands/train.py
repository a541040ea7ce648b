from pathlib import Path

from ...checkpoints import checkpoint_save
from ...pipeline import CHECKPOINT_NAME, TRAINING_CURVE_CSV, load_dataset, train_models, write_training_curve
from ..base import PushAdaptCommand, add_data_arguments, add_offline_arguments


class Command(PushAdaptCommand):
    help = "Офлайн-обучение комбинированной модели (и базовой сети); пишет чекпойнт и кривую обучения."
    run_kind = "train"

    def add_command_arguments(self, parser):
        add_data_arguments(parser, "Офлайн-набор: каталог с manifest.json или файл JSONL/CSV "
                                   "(по умолчанию <data_dir>/offline).")
        add_offline_arguments(parser)

    def execute_run(self, config, options):
        data = Path(options["data"] or Path(config.data_dir) / "offline")
        out_dir = self.out_dir(config)
        training = train_models(load_dataset(data), config.experiment_config())
        checkpoint_path = Path(config.checkpoint or out_dir / CHECKPOINT_NAME)
        checkpoint_save(training.checkpoint, checkpoint_path)
        write_training_curve(out_dir / TRAINING_CURVE_CSV, training.curve, training.nn_curve)
        self.record_run(config, out_dir, training.checkpoint.scores, digest=training.checkpoint.config_hash)
        for series, (pos, rot) in sorted(training.checkpoint.scores.items()):
            self.stdout.write(f"{series}: NMSE pos {pos:.4f}, rot {rot:.4f}")
        self.success(f"checkpoint written to {checkpoint_path}")
