# coding: utf-8

# # Visual odometry on a synthetic sequence
#
# Two-view estimates are chained into a trajectory, aligned to ground truth with a Sim(3)
# fit, and scored with relative pose errors.

import numpy as np

from epipose import (SceneConfig, estimate_relative_pose, project_scene, sample_points)
from epipose.camera import RelativePose
from epipose.evaluation import (aggregate_pose_errors, compose_trajectory, position_rmse,
                                relative_trajectory_errors, umeyama_sim3_align)
from epipose.rotations import axis_angle_rotation
from epipose.synthetic import SyntheticScene

rng = np.random.default_rng(5)
cfg = SceneConfig()
K = cfg.intrinsics.matrix

# Ground truth: a car-like path, 1.5 m per frame, gently turning.

gt_steps = []
for i in range(40):
    R = axis_angle_rotation([0, 1, 0], np.radians(2.0 * np.sin(i / 6)))
    gt_steps.append(RelativePose(R, [0.05, 0.0, 1.0]))
gt = compose_trajectory(gt_steps, step_length=1.5)

# For each frame pair we render points, add pixel noise and estimate the two-view pose. The
# estimator returns the map from frame i to frame i+1, so we invert it before chaining.

estimates = []
for step in gt_steps:
    two_view = step.inverse()
    pts = sample_points(two_view, 1.5, cfg, rng)
    corr = project_scene(SyntheticScene(pts, two_view, 1.5, cfg.intrinsics, cfg.image_size))
    corr[:, 2:] += rng.normal(scale=0.3, size=(len(corr), 2))
    estimates.append(estimate_relative_pose(corr, K, K).pose.inverse())

# Monocular translations have unit length; use 1 per step and let the alignment find the scale.

est = compose_trajectory(estimates)
align = umeyama_sim3_align(est, gt)
print(f"recovered scale {align.scale:.3f} (true step length 1.5)")
print(f"ATE RMSE after alignment: {position_rmse(align.aligned, gt):.3f} m")

rot, trans = aggregate_pose_errors(relative_trajectory_errors(align.aligned, gt))
print(f"relative rotation error    mean {rot.mean:.3f}  median {rot.median:.3f} deg")
print(f"relative translation error mean {trans.mean:.3f}  median {trans.median:.3f} deg")
