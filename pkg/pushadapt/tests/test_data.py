import json
import math
import tempfile
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose
from django.test import SimpleTestCase

from pushadapt.data import (
    CsvColumnSource,
    SupervisedPair,
    Trajectory,
    TrajectoryStep,
    convert_to_jsonl,
    fit_norm_stats,
    load_trajectories,
    save_trajectories,
    split_dataset,
    stack_pairs,
    to_pairs,
)
from pushadapt.exceptions import DegenerateDataError, SplitError, TrajectoryFormatError, TrajectoryTooShortError
from pushadapt.geometry import ObjectPose
from pushadapt.model import PredictionOutcome, PushInput

from .factories import simulated_trajectories, straight_trajectory


def pair(p, u, dp, dw):
    return SupervisedPair(PushInput(np.array(p, dtype=float), np.array(u, dtype=float)),
                          PredictionOutcome(np.array(dp, dtype=float), dw))


class PairTests(SimpleTestCase):
    def test_pair_count(self):
        self.assertEqual(len(to_pairs(straight_trajectory(length=5))), 4)
        self.assertEqual(len(to_pairs(straight_trajectory(length=5), horizon=3)), 2)

    def test_stationary_object(self):
        pairs = to_pairs(straight_trajectory(length=4, step=0.0))
        for p in pairs:
            assert_allclose(p.y.dp_o, [0.0, 0.0])
            self.assertEqual(p.y.dw_o, 0.0)

    def test_straight_push(self):
        first = to_pairs(straight_trajectory(length=3, step=0.01))[0]
        assert_allclose(first.x.p_r_o, [-0.1, 0.0])
        assert_allclose(first.x.u_r_o, [0.01, 0.0])
        assert_allclose(first.y.dp_o, [0.01, 0.0])
        self.assertEqual(first.t, 0)
        self.assertEqual(first.traj_id, "a")

    def test_longer_horizon_in_start_frame(self):
        steps = [
            TrajectoryStep(t, ObjectPose(np.zeros(2), t * math.pi / 4), np.array([0.0, -0.1]), motion)
            for t, motion in enumerate([np.array([0.01, 0.0]), np.array([0.0, 0.01]), np.zeros(2)])
        ]
        (only,) = to_pairs(Trajectory("r", steps), horizon=2)
        assert_allclose(only.x.u_r_o, [0.01, 0.01])
        assert_allclose(only.y.dp_o, [0.0, 0.0])
        self.assertAlmostEqual(only.y.dw_o, math.pi / 2)

    def test_outcome_in_object_frame(self):
        steps = [
            TrajectoryStep(0, ObjectPose.of(0.0, 0.0, math.pi / 2), np.zeros(2), np.array([0.0, 0.01])),
            TrajectoryStep(1, ObjectPose.of(0.0, 0.01, math.pi / 2), np.zeros(2), np.zeros(2)),
        ]
        (only,) = to_pairs(Trajectory("o", steps))
        assert_allclose(only.y.dp_o, [0.01, 0.0], atol=1e-15)
        assert_allclose(only.x.u_r_o, [0.01, 0.0], atol=1e-15)

    def test_too_short(self):
        with self.assertRaises(TrajectoryTooShortError):
            to_pairs(straight_trajectory(length=2), horizon=2)
        with self.assertRaises(ValueError):
            to_pairs(straight_trajectory(length=4), horizon=0)


class NormStatsFitTests(SimpleTestCase):
    def test_pooled_position_scale(self):
        stats = fit_norm_stats([
            pair([0.0, 0.0], [0.0, 0.0], [-1.0, 0.0], 0.0),
            pair([1.0, 1.0], [1.0, 1.0], [1.0, 0.0], 1.0),
        ])
        self.assertAlmostEqual(stats.dp_std, math.sqrt(0.5))
        assert_allclose(stats.dp_mean, [0.0, 0.0])
        assert_allclose(stats.input_std, [0.5, 0.5, 0.5, 0.5])
        self.assertAlmostEqual(stats.dw_std, 0.5)

    def test_constant_rotation_is_degenerate(self):
        with self.assertRaises(DegenerateDataError) as ctx:
            fit_norm_stats([
                pair([0.0, 0.0], [0.0, 0.0], [-1.0, 0.0], 0.2),
                pair([1.0, 1.0], [1.0, 1.0], [1.0, 0.0], 0.2),
            ])
        self.assertEqual(ctx.exception.variable, "dw_o")

    def test_needs_two_pairs(self):
        with self.assertRaises(DegenerateDataError):
            fit_norm_stats([pair([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 0.0)])

    def test_permutation_invariant(self):
        batch = stack_pairs([p for traj in simulated_trajectories(count=4) for p in to_pairs(traj)])
        order = np.random.default_rng(0).permutation(len(batch))
        first, second = fit_norm_stats(batch), fit_norm_stats(batch.subset(order))
        for name, array in first.named_arrays().items():
            assert_allclose(second.named_arrays()[name], array, rtol=1e-12, atol=1e-15)


class SplitTests(SimpleTestCase):
    def setUp(self):
        self.trajectories = [straight_trajectory(f"t{i}") for i in range(10)]

    def test_sizes_and_partition(self):
        train, valid = split_dataset(self.trajectories, 0.8, seed=3)
        self.assertEqual((len(train), len(valid)), (8, 2))
        ids = sorted(t.id for t in train + valid)
        self.assertEqual(ids, sorted(t.id for t in self.trajectories))

    def test_deterministic(self):
        first = split_dataset(self.trajectories, 0.8, seed=3)
        second = split_dataset(self.trajectories, 0.8, seed=3)
        self.assertEqual([t.id for t in first[1]], [t.id for t in second[1]])

    def test_errors(self):
        with self.assertRaises(SplitError):
            split_dataset(self.trajectories[:1], 0.5, seed=0)
        with self.assertRaises(ValueError):
            split_dataset(self.trajectories, 1.0, seed=0)


class FileFormatTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def records(self, trajectories):
        return [step.to_record(t.id) for t in trajectories for step in t.steps]

    def test_jsonl_round_trip_is_exact(self):
        trajectories = simulated_trajectories(count=3, steps=10)
        path = save_trajectories(trajectories, self.root / "set.jsonl")
        loaded = load_trajectories(path)
        self.assertEqual(self.records(loaded), self.records(trajectories))
        self.assertEqual(loaded[0].metadata["side"], "front")

    def test_csv_round_trip_is_exact(self):
        trajectories = simulated_trajectories(count=2, steps=8)
        loaded = load_trajectories(save_trajectories(trajectories, self.root / "set.csv"))
        self.assertEqual(self.records(loaded), self.records(trajectories))

    def test_empty_file(self):
        (self.root / "empty.jsonl").write_text("")
        self.assertEqual(load_trajectories(self.root / "empty.jsonl"), [])

    def test_malformed_line_is_reported(self):
        path = save_trajectories([straight_trajectory(length=6)], self.root / "bad.jsonl")
        with path.open("a") as handle:
            handle.write("{not json\n")
        with self.assertRaises(TrajectoryFormatError) as ctx:
            load_trajectories(path)
        self.assertEqual(ctx.exception.line, 7)
        self.assertIn("bad.jsonl:7:", str(ctx.exception))

    def test_repeated_step(self):
        path = save_trajectories([straight_trajectory(length=3)] * 2, self.root / "dup.jsonl")
        with self.assertRaisesMessage(TrajectoryFormatError, "non-monotonic t"):
            load_trajectories(path)

    def test_missing_field(self):
        path = self.root / "missing.jsonl"
        path.write_text('{"traj_id": "a", "t": 0, "po_x": 0.0}\n')
        with self.assertRaisesMessage(TrajectoryFormatError, "missing field(s)"):
            load_trajectories(path)

    def test_single_step_trajectory(self):
        path = save_trajectories([straight_trajectory(length=1)], self.root / "one.jsonl")
        with self.assertRaises(TrajectoryFormatError):
            load_trajectories(path)

    def test_unknown_format(self):
        with self.assertRaises(TrajectoryFormatError):
            load_trajectories(self.root / "set.parquet")

    def test_steps_sorted_by_time(self):
        path = self.root / "shuffled.jsonl"
        records = self.records([straight_trajectory(length=3)])
        path.write_text("".join(json.dumps(r) + "\n" for r in reversed(records)))
        (loaded,) = load_trajectories(path)
        self.assertEqual([step.t for step in loaded.steps], [0, 1, 2])

    def test_external_csv_columns(self):
        path = self.root / "external.csv"
        path.write_text(
            "run,frame,x,y,yaw,rx,ry,vx,vy\n"
            "p1,0,0.0,0.0,0.0,-0.1,0.0,0.01,0.0\n"
            "p1,1,0.01,0.0,0.0,-0.09,0.0,0.01,0.0\n"
        )
        source = CsvColumnSource(path, {"traj_id": "run", "t": "frame", "po_x": "x", "po_y": "y", "omega": "yaw",
                                        "pr_x": "rx", "pr_y": "ry", "ur_x": "vx", "ur_y": "vy"})
        self.assertEqual(convert_to_jsonl(source, self.root / "converted.jsonl"), 1)
        (loaded,) = load_trajectories(self.root / "converted.jsonl")
        self.assertEqual(loaded.id, "p1")
        assert_allclose(loaded.steps[1].object_pose.position, [0.01, 0.0])

    def test_external_csv_missing_column(self):
        path = self.root / "external.csv"
        path.write_text("run,frame\np1,0\n")
        with self.assertRaises(TrajectoryFormatError) as ctx:
            CsvColumnSource(path, {"traj_id": "run", "t": "frame"}).read()
        self.assertEqual(ctx.exception.line, 1)
