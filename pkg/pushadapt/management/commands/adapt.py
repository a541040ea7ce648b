from pathlib import Path

from ...checkpoints import checkpoint_load, checkpoint_save
from ...pipeline import (
    ADAPTED_CHECKPOINT_NAME,
    CHECKPOINT_NAME,
    LOSSES_CSV,
    SUMMARY_CSV,
    THETA_CSV,
    adapt_checkpoint,
    load_dataset,
    write_losses,
    write_summary,
    write_theta_history,
)
from ..base import PushAdaptCommand, add_data_arguments, add_online_arguments


class Command(PushAdaptCommand):
    help = "Онлайн-адаптация θ_online на потоке траекторий; пишет потери, summary.csv и адаптированный чекпойнт."
    run_kind = "adapt"

    def add_command_arguments(self, parser):
        parser.add_argument("--checkpoint", default=None, help="Чекпойнт после train (по умолчанию <out>/checkpoint.json).")
        add_data_arguments(parser, "Онлайн-набор: каталог с manifest.json или файл JSONL/CSV "
                                   "(по умолчанию <data_dir>/online).")
        add_online_arguments(parser)

    def execute_run(self, config, options):
        out_dir = self.out_dir(config)
        checkpoint = checkpoint_load(config.checkpoint or out_dir / CHECKPOINT_NAME)
        data = Path(options["data"] or Path(config.data_dir) / "online")
        adaptation = adapt_checkpoint(checkpoint, load_dataset(data), config.experiment_config())
        result = adaptation.result

        write_losses(out_dir / LOSSES_CSV, result)
        write_theta_history(out_dir / THETA_CSV, result)
        write_summary(out_dir / SUMMARY_CSV, [adaptation.summary])
        checkpoint_save(adaptation.checkpoint, out_dir / ADAPTED_CHECKPOINT_NAME)

        scores = dict(checkpoint.scores)
        scores.update(result.summary())
        self.record_run(config, out_dir, scores, steps=len(result), digest=checkpoint.config_hash)
        for series, (pos, rot) in result.summary().items():
            self.stdout.write(f"{series}: NMSE pos {pos:.4f}, rot {rot:.4f}")
        final = result.final_online
        self.success(f"{len(result)} online steps; final v=({final.v[0]:.4f}, {final.v[1]:.4f}) m, "
                     f"h={final.h:.4f} m; results in {out_dir}")
