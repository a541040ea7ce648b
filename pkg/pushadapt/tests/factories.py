"""Небольшие синтетические наборы для тестов."""
from dataclasses import replace

import numpy as np

from pushadapt.data import Trajectory, TrajectoryStep
from pushadapt.geometry import ObjectPose
from pushadapt.simulator import SceneConfig, derive_seed, sample_scripts, simulate_push


def simulated_trajectories(count=6, seed=0, scene=None, side="front", steps=30, prefix="t"):
    scene = scene or SceneConfig()
    scripts = sample_scripts(count, seed, scene, side=side, steps=steps)
    return [
        simulate_push(replace(scene, seed=derive_seed(seed, index)), script, f"{prefix}{index:02d}")
        for index, script in enumerate(scripts)
    ]


def straight_trajectory(traj_id="a", length=4, step=0.01, turn=0.0):
    """Объект едет по x и поворачивается на turn за шаг; робот стоит сзади."""
    steps = []
    for t in range(length):
        pose = ObjectPose(np.array([t * step, 0.0]), t * turn)
        steps.append(TrajectoryStep(t, pose, np.array([t * step - 0.1, 0.0]), np.array([step, 0.0])))
    return Trajectory(traj_id, steps)
