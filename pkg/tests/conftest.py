import numpy as np
import pytest

from epipose.synthetic import SceneConfig, generate_scene, project_scene, scene_ground_truth

PRESETS = ("random", "forward", "lateral")


def make_scene(seed=0, preset="random", **kw):
    scene = generate_scene(SceneConfig(seed=seed, translation_direction=preset, **kw))
    F, pose = scene_ground_truth(scene)
    return scene, project_scene(scene), F, pose


@pytest.fixture
def scene():
    return make_scene(seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng, angle=None):
    from epipose.rotations import axis_angle_rotation
    axis = rng.normal(size=3)
    if angle is None:
        angle = rng.uniform(0, np.pi)
    return axis_angle_rotation(axis, angle)
