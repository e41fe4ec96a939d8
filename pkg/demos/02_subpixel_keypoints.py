# coding: utf-8

# # Subpixel keypoints from a heatmap
#
# A detector emits a dense score map. Non-maximum suppression finds integer peaks and a 5x5
# softargmax moves each one to a subpixel position.

import numpy as np

from epipose import heatmap_logits, nms, render_gaussian_labels, softargmax_refine
from epipose.keypoints import mutual_nearest_neighbor_match, sample_descriptors, softargmax_gradient

rng = np.random.default_rng(0)
truth = rng.uniform(8, 56, size=(5, 2))

# Render Gaussian blobs at the true positions. Softargmax weighs scores by exp(score), so we feed
# it log-labels: exp(log G) is the Gaussian itself and the expectation lands on its center.

heat = render_gaussian_labels(truth, 64, 64, sigma=1.0)
logits = heatmap_logits(heat)
peaks = nms(heat, window=4, score_threshold=0.5)
print("integer peaks:", [(k.u, k.v) for k in peaks])

refined = np.array([[kp.u, kp.v] for kp in (softargmax_refine(logits, (p.u, p.v)) for p in peaks)])
for p in refined:
    err = np.min(np.linalg.norm(truth - p, axis=1))
    print(f"refined ({p[0]:7.3f}, {p[1]:7.3f})  error {err:.4f} px")

# The refinement is differentiable. Each row of the Jacobian sums to zero because adding a
# constant to the patch does not move the softmax.

J = softargmax_gradient(logits[18:23, 18:23])
print("Jacobian shape:", J.shape, " row sums:", J.sum(axis=1))

# Descriptors come from a coarse map (one cell per 8 pixels). A second view with slightly jittered
# descriptors still matches one-to-one under mutual nearest neighbours.

desc_map = rng.normal(size=(8, 8, 16))
d1 = sample_descriptors(desc_map, refined)
d2 = d1 + rng.normal(scale=0.05, size=d1.shape)
d2 /= np.linalg.norm(d2, axis=1, keepdims=True)
print("matches:", mutual_nearest_neighbor_match(d1, d2).tolist())
