import csv
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, override_settings, tag

from pushadapt.checkpoints import checkpoint_load
from pushadapt.models import ExperimentRun, ModelScore


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@override_settings(PUSHADAPT={})
class CommandPipelineTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.data = self.root / "data"
        self.out = self.root / "out"

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, name, **options):
        stdout = StringIO()
        call_command(name, stdout=stdout, **options)
        return stdout.getvalue()

    def simulate(self):
        return self.run_command("simulate", out_dir=str(self.data), seed=1, offline_trajectories=4,
                                online_trajectories=2, push_steps=12)

    def train(self, **options):
        return self.run_command("train", data=str(self.data / "offline"), out_dir=str(self.out), epochs=3,
                                log_every=0, **options)

    def test_simulate_train_adapt_eval_plot(self):
        self.assertIn("4 offline and 2 online", self.simulate())
        self.assertTrue((self.data / "offline" / "manifest.json").exists())

        output = self.train()
        self.assertIn("offline_nn: NMSE pos", output)
        checkpoint = checkpoint_load(self.out / "checkpoint.json")
        self.assertIsNotNone(checkpoint.baseline)
        self.assertEqual(len(read_rows(self.out / "training_curve.csv")), 3)

        output = self.run_command("adapt", data=str(self.data / "online"), out_dir=str(self.out))
        self.assertIn("online: NMSE pos", output)
        summary = read_rows(self.out / "summary.csv")
        self.assertEqual(summary[0]["experiment"], "experiment")
        adapted = checkpoint_load(self.out / "adapted.json")
        self.assertEqual(adapted.config_hash, checkpoint.config_hash)
        theta = read_rows(self.out / "theta.csv")
        self.assertEqual(len(theta), 2 * 11)

        self.run_command("eval", data=str(self.data / "online"), out_dir=str(self.out))
        self.assertEqual([row["series"] for row in read_rows(self.out / "evaluation.csv")], ["fixed", "nn"])

        self.run_command("plot", out_dir=str(self.out), window=4)
        self.assertEqual(len(list((self.out / "plots").glob("loss_*.svg"))), 4)
        self.assertFalse(ExperimentRun.objects.exists())

    def test_zero_online_rate_matches_fixed(self):
        self.simulate()
        self.train(train_baseline=False)
        self.run_command("adapt", data=str(self.data / "online"), out_dir=str(self.out), online_lr=0.0,
                         experiment="frozen")
        (row,) = read_rows(self.out / "summary.csv")
        self.assertEqual(row["experiment"], "frozen")
        self.assertEqual(row["online_pos"], row["fixed_pos"])
        self.assertEqual(row["online_rot"], row["fixed_rot"])
        self.assertEqual(row["offline_nn_pos"], "")

    def test_config_file_and_record(self):
        self.simulate()
        config = self.root / "run.env"
        config.write_text(f"out_dir={self.out}\nepochs=2\nrecord=true\nexperiment=from-file\n")
        self.run_command("train", data=str(self.data / "offline"), config=str(config), log_every=0)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.kind, ExperimentRun.Kind.TRAIN)
        self.assertEqual(run.label, "from-file")
        self.assertEqual(run.config["epochs"], 2)
        self.assertEqual(set(run.scores.values_list("series", flat=True)), {"offline", "offline_nn"})

    def test_domain_errors_become_command_errors(self):
        with self.assertRaises(CommandError):
            self.run_command("train", data=str(self.root / "missing.jsonl"), out_dir=str(self.out))
        with self.assertRaisesMessage(CommandError, "online_lr"):
            self.run_command("adapt", out_dir=str(self.out), online_lr=-0.5)
        broken = self.root / "broken.json"
        broken.write_text("{")
        with self.assertRaises(CommandError):
            self.run_command("eval", checkpoint=str(broken), out_dir=str(self.out))
        with self.assertRaises(CommandError):
            self.run_command("plot", out_dir=str(self.out), window=0)
        with self.assertRaisesMessage(CommandError, "preset"):
            self.run_command("simulate", out_dir=str(self.data), preset="moon")


@tag("slow")
@override_settings(PUSHADAPT={})
class ExperimentCommandTests(TestCase):
    def test_experiment_end_to_end(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp)
            stdout = StringIO()
            call_command("experiment", out_dir=str(out), preset="friction_shift", offline_trajectories=4,
                         online_trajectories=2, push_steps=12, epochs=3, log_every=0, record=True, stdout=stdout)
            self.assertIn("experiment friction_shift", stdout.getvalue())
            for name in ("training_curve.csv", "losses.csv", "theta.csv", "summary.csv", "checkpoint.json",
                         "adapted.json", "plots/loss_total.svg", "data/online/manifest.json"):
                self.assertTrue((out / name).exists(), name)
            (row,) = read_rows(out / "summary.csv")
            self.assertEqual(row["experiment"], "friction_shift")
            run = ExperimentRun.objects.get(kind=ExperimentRun.Kind.EXPERIMENT)
            self.assertEqual(
                set(ModelScore.objects.filter(run=run).values_list("series", flat=True)),
                {"offline", "offline_nn", "online", "fixed", "nn"},
            )
