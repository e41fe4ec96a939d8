"""Relative camera pose estimation from point correspondences."""
from .camera import CameraIntrinsics, RelativePose
from .errors import *  # noqa: F401,F403
from .evaluation import (ErrorStats, PoseErrorRecord, SampsonTable, aggregate_pose_errors,
                         compose_trajectory, relative_trajectory_errors, sampson_inlier_table,
                         umeyama_sim3_align)
from .geometry import (cheirality_select, classical_sampson_distance, decompose_essential,
                       enforce_rank2, epipolar_line, essential_from_fundamental,
                       fundamental_from_pose, hartley_normalize, sampson_gradient,
                       sampson_residual, triangulate_dlt, triangulate_points,
                       weighted_eight_point)
from .keypoints import (Keypoint, bilinear_sample_descriptor, detect_keypoints, heatmap_logits,
                        mutual_nearest_neighbor_match, nms, render_gaussian_labels,
                        sample_descriptors, softargmax_gradient, softargmax_refine)
from .losses import (FLossConfig, PoseLossConfig, f_loss, pose_loss, rotation_error,
                     translation_angular_error)
from .robust import (GemanMcClurePredictor, HuberPredictor, IrlsConfig, MLPWeightPredictor,
                     RansacConfig, UniformPredictor, estimate_relative_pose, file_weight_predictor,
                     geman_mcclure_predictor, huber_predictor, irls_estimate, ransac_estimate)
from .rotations import (quaternion_to_rotation, rodrigues_to_rotation, rodrigues_vector,
                        rotation_to_quaternion)
from .synthetic import (CorruptionConfig, SceneConfig, SyntheticScene, corrupt, generate_scene,
                        project_scene, sample_points, scene_ground_truth)

__version__ = "0.1.0"
