import json
import math
import tempfile
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose
from django.test import SimpleTestCase

from pushadapt.exceptions import SceneConfigError
from pushadapt.geometry import ObjectPose, outcome_to_world_frame, to_object_frame, wrap_angle
from pushadapt.physics import correct_output_motion, physical_push_arrays
from pushadapt.simulator import (
    MANIFEST_NAME,
    PushScript,
    SceneConfig,
    closest_boundary_point,
    contact_resolve,
    derive_seed,
    generate_suite,
    load_suite,
    read_manifest,
    sample_scripts,
    script_start,
    simulate_push,
)


class SceneConfigTests(SimpleTestCase):
    def test_defaults_are_valid(self):
        scene = SceneConfig()
        assert_allclose(scene.half, [0.05, 0.04])
        assert_allclose(scene.v, [0.0, 0.0])

    def test_rejects_bad_values(self):
        for kwargs in (
            {"box_half_extents": (0.0, 0.04)},
            {"robot_radius": -0.01},
            {"true_h": 0.0},
            {"noise_std_pos": -1e-4},
            {"slip_noise": 1.5},
            {"step_length": 0.01},
            {"true_v": (float("nan"), 0.0)},
        ):
            with self.subTest(kwargs=kwargs), self.assertRaises(SceneConfigError):
                SceneConfig(**kwargs)

    def test_script_validation(self):
        with self.assertRaises(SceneConfigError):
            PushScript(side="top")
        with self.assertRaises(SceneConfigError):
            PushScript(steps=1)
        with self.assertRaises(SceneConfigError):
            script_start(SceneConfig(), PushScript(side="left", offset=0.045))

    def test_from_dict(self):
        scene = SceneConfig.from_dict({"true_h": 0.03, "true_v": [0.01, 0.0]})
        self.assertEqual(scene.true_v, (0.01, 0.0))


class ContactTests(SimpleTestCase):
    def test_closest_point_outside(self):
        b, normal, inside = closest_boundary_point(np.array([0.0, -0.07]), np.array([0.05, 0.04]))
        assert_allclose(b, [0.0, -0.04])
        assert_allclose(normal, [0.0, -1.0])
        self.assertFalse(inside)

    def test_closest_point_inside(self):
        b, normal, inside = closest_boundary_point(np.array([0.045, 0.0]), np.array([0.05, 0.04]))
        assert_allclose(b, [0.05, 0.0])
        assert_allclose(normal, [1.0, 0.0])
        self.assertTrue(inside)

    def test_no_contact_when_far(self):
        pose = ObjectPose.of(0.0, 0.0, 0.0)
        self.assertIsNone(contact_resolve(SceneConfig(), pose, [0.0, -0.2], [0.0, 0.004]))

    def test_contact_relative_to_true_com(self):
        scene = SceneConfig(true_v=(0.01, 0.0))
        contact = contact_resolve(scene, ObjectPose.of(0.0, 0.0, 0.0), [0.0, -0.061], [0.0, 0.004])
        assert_allclose(contact.c, [0.01, -0.04])
        assert_allclose(contact.u_c, [0.0, 0.004])

    def test_slip_attenuates_tangential_motion(self):
        contact = contact_resolve(SceneConfig(), ObjectPose.of(0.0, 0.0, 0.0), [0.0, -0.059], [0.002, 0.003],
                                  slip=0.5)
        assert_allclose(contact.u_c, [0.001, 0.003])


class SimulatePushTests(SimpleTestCase):
    def test_central_push_goes_straight(self):
        trajectory = simulate_push(SceneConfig(), PushScript(steps=40))
        positions, headings, _, _ = trajectory.arrays()
        self.assertEqual(len(trajectory), 40)
        assert_allclose(headings, 0.0, atol=1e-15)
        assert_allclose(positions[:, 0], 0.0, atol=1e-15)
        self.assertGreater(positions[-1, 1], 0.1)

    def test_steps_follow_push_model(self):
        scene = SceneConfig(true_v=(0.008, -0.005), true_h=0.035)
        trajectory = simulate_push(scene, PushScript(offset=0.02, angle=0.2, steps=40, heading=0.7))
        touched = 0
        for current, following in zip(trajectory.steps, trajectory.steps[1:]):
            contact = contact_resolve(scene, current.object_pose, current.robot_pos, current.robot_motion)
            if contact is None:
                assert_allclose(following.object_pose.position, current.object_pose.position)
                continue
            touched += 1
            d_com, d_omega = physical_push_arrays(contact.c, contact.u_c, scene.true_h)
            expected = outcome_to_world_frame(current.object_pose, correct_output_motion(d_com, d_omega, scene.v),
                                              d_omega)
            assert_allclose(following.object_pose.position, expected.position, atol=1e-12)
            self.assertAlmostEqual(wrap_angle(following.object_pose.orientation - expected.orientation), 0.0,
                                   places=12)
        self.assertGreater(touched, 5)

    def test_disc_never_penetrates(self):
        scene = SceneConfig()
        for script in sample_scripts(5, 1, scene, steps=50):
            for step in simulate_push(scene, script).steps:
                p_r_o, _ = to_object_frame(step.object_pose, step.robot_pos, np.zeros(2))
                b, _, inside = closest_boundary_point(p_r_o, scene.half)
                self.assertFalse(inside)
                self.assertGreaterEqual(np.linalg.norm(p_r_o - b), scene.robot_radius - 1e-9)

    def test_side_push(self):
        trajectory = simulate_push(SceneConfig(), PushScript(side="left", steps=30))
        positions, _, _, _ = trajectory.arrays()
        self.assertGreater(positions[-1, 0], 0.05)
        self.assertEqual(trajectory.metadata["side"], "left")

    def test_seeded_noise(self):
        scene = SceneConfig(noise_std_pos=1e-4, noise_std_rot=1e-3, seed=7)
        first = simulate_push(scene, PushScript(steps=20))
        second = simulate_push(scene, PushScript(steps=20))
        other = simulate_push(SceneConfig(noise_std_pos=1e-4, noise_std_rot=1e-3, seed=8), PushScript(steps=20))
        self.assertEqual([s.to_record("x") for s in first.steps], [s.to_record("x") for s in second.steps])
        self.assertNotEqual(first.steps[5].object_pose.orientation, other.steps[5].object_pose.orientation)

    def test_warns_without_contact(self):
        with self.assertLogs("pushadapt.simulator", "WARNING"):
            simulate_push(SceneConfig(), PushScript(steps=5, standoff=0.5), "lonely")

    def test_start_geometry(self):
        pose, robot, motion = script_start(SceneConfig(), PushScript(heading=math.pi / 2))
        self.assertAlmostEqual(pose.orientation, math.pi / 2)
        p_r_o, u_r_o = to_object_frame(pose, robot, motion)
        assert_allclose(p_r_o, [0.0, -0.06], atol=1e-15)
        assert_allclose(u_r_o, [0.0, 0.004], atol=1e-15)


class SuiteTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_derive_seed(self):
        self.assertEqual(derive_seed(3, 5), derive_seed(3, 5))
        self.assertNotEqual(derive_seed(3, 5), derive_seed(3, 6))
        self.assertNotEqual(derive_seed(3, 5), derive_seed(4, 5))

    def test_sample_scripts_within_face(self):
        scene = SceneConfig()
        scripts = sample_scripts(50, 2, scene, side="right", max_angle=0.2)
        self.assertEqual(scripts, sample_scripts(50, 2, scene, side="right", max_angle=0.2))
        for script in scripts:
            self.assertLessEqual(abs(script.offset), 0.6 * 0.04)
            self.assertLessEqual(abs(script.angle), 0.2)

    def test_generate_and_load(self):
        scenes = [SceneConfig(), SceneConfig(true_h=0.03)]
        scripts = sample_scripts(3, 0, scenes[0], steps=10)
        manifest = generate_suite(scenes, scripts, self.root / "suite", master_seed=9, name="demo")
        self.assertEqual(len(manifest), 6)
        loaded = load_suite(self.root / "suite")
        self.assertEqual([t.id for t in loaded], [f"demo-{i:04d}" for i in range(6)])
        entry = read_manifest(self.root / "suite" / MANIFEST_NAME).entries["demo-0004.jsonl"]
        self.assertEqual(entry["scene"]["true_h"], 0.03)
        self.assertEqual(entry["scene"]["seed"], derive_seed(9, 4))

    def test_suite_is_reproducible(self):
        scenes = [SceneConfig(noise_std_pos=1e-4, noise_std_rot=1e-3)]
        scripts = sample_scripts(2, 0, scenes[0], steps=10)
        generate_suite(scenes, scripts, self.root / "a", master_seed=1)
        generate_suite(scenes, scripts, self.root / "b", master_seed=1)
        for name in ("suite-0000.jsonl", "suite-0001.jsonl", MANIFEST_NAME):
            self.assertEqual((self.root / "a" / name).read_bytes(), (self.root / "b" / name).read_bytes())

    def test_bad_manifest(self):
        (self.root / MANIFEST_NAME).write_text(json.dumps({"format": "other"}))
        with self.assertRaises(SceneConfigError):
            read_manifest(self.root)
        with self.assertRaises(SceneConfigError):
            generate_suite([], [PushScript()], self.root / "empty")
