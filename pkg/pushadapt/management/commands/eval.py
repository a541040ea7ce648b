import csv
from pathlib import Path

from ...checkpoints import checkpoint_load
from ...data import pairs_from_trajectories
from ...model import BaselineModel
from ...pipeline import CHECKPOINT_NAME, evaluate_baseline, evaluate_combined, load_dataset
from ..base import PushAdaptCommand, add_data_arguments

EVALUATION_CSV = "evaluation.csv"


class Command(PushAdaptCommand):
    help = "Оценка чекпойнта на наборе траекторий без адаптации (NMSE по положению и повороту)."
    run_kind = "eval"

    def add_command_arguments(self, parser):
        parser.add_argument("--checkpoint", default=None, help="Чекпойнт (по умолчанию <out>/checkpoint.json).")
        add_data_arguments(parser, "Набор для оценки (по умолчанию <data_dir>/online).")

    def execute_run(self, config, options):
        out_dir = self.out_dir(config)
        checkpoint = checkpoint_load(config.checkpoint or out_dir / CHECKPOINT_NAME)
        data = Path(options["data"] or Path(config.data_dir) / "online")
        pairs = pairs_from_trajectories(load_dataset(data), config.horizon)

        scores = {"fixed": evaluate_combined(checkpoint.model, pairs)}
        if checkpoint.baseline is not None:
            scores["nn"] = evaluate_baseline(BaselineModel(checkpoint.baseline, checkpoint.model.norm), pairs)

        path = out_dir / EVALUATION_CSV
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["series", "nmse_pos", "nmse_rot"])
            for series, (pos, rot) in scores.items():
                writer.writerow([series, pos, rot])
                self.stdout.write(f"{series}: NMSE pos {pos:.4f}, rot {rot:.4f}")
        self.record_run(config, out_dir, scores, steps=len(pairs), digest=checkpoint.config_hash)
        self.success(f"evaluation of {len(pairs)} pairs written to {path}")
