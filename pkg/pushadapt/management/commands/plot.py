from pathlib import Path

from django.core.management.base import CommandError

from ...pipeline import LOSSES_CSV
from ...plotting import write_loss_plots
from ..base import PushAdaptCommand


class Command(PushAdaptCommand):
    help = "SVG-графики онлайн-потерь (скользящее среднее и полоса ±σ) по losses.csv."

    def add_command_arguments(self, parser):
        parser.add_argument("--losses", default=None, help="CSV с потерями (по умолчанию <out>/losses.csv).")
        parser.add_argument("--window", type=int, default=10, help="Окно скользящего среднего.")
        parser.add_argument("--offline-loss", type=float, default=None,
                            help="Горизонтальная линия на графике total: средняя офлайн-потеря обучения.")

    def execute_run(self, config, options):
        out_dir = Path(config.out_dir)
        losses = Path(options["losses"] or out_dir / LOSSES_CSV)
        if options["window"] < 1:
            raise CommandError("--window must be >= 1")
        paths = write_loss_plots(losses, out_dir / "plots", options["window"], options["offline_loss"])
        self.success(f"{len(paths)} plots written to {out_dir / 'plots'}")
