# coding: utf-8

# # Training losses on fixed geometry
#
# F-loss measures epipolar distances of virtual grid correspondences; pose-loss compares the
# decomposed candidates with the true pose and saturates at c_r + lambda_rt * c_t.

import numpy as np

from epipose import SceneConfig, decompose_essential, essential_from_fundamental, generate_scene
from epipose import scene_ground_truth
from epipose.camera import RelativePose
from epipose.losses import FLossConfig, f_loss, pose_loss
from epipose.rotations import axis_angle_rotation

scene = generate_scene(SceneConfig(seed=4))
F_gt, pose_gt = scene_ground_truth(scene)
K = scene.intrinsics.matrix
cfg = FLossConfig(640, 480)

# F-loss vanishes at the truth and grows linearly with a small perturbation.

rng = np.random.default_rng(1)
D = rng.normal(size=(3, 3))
D /= np.linalg.norm(D)
for eps in (0.0, 1e-9, 1e-8, 1e-7):
    print(f"eps={eps:.0e}  f_loss={f_loss(F_gt + eps * D, F_gt, cfg):.6f} px")

# Pose-loss is zero when the ground truth is among the candidates...

cands = decompose_essential(essential_from_fundamental(F_gt, K, K))
print("pose_loss(truth among candidates):", pose_loss(cands, pose_gt).total)

# ...and grows with the rotation offset until the clamps kick in.

for deg in (0.5, 1, 5, 20, 90):
    wrong = RelativePose(axis_angle_rotation([0, 1, 0], np.radians(deg)) @ pose_gt.rotation,
                         pose_gt.translation)
    print(f"{deg:5.1f} deg off: {pose_loss([wrong], pose_gt)}")
