"""
=========================
mAP and agent-group mAPs
=========================

AP averages the precision at the rank of every positive clip. mAP is the
mean AP over classes, and the per-group numbers restrict that mean to the
classes of one agent group (four-wheelers, two-wheelers, pedestrians and
their grouped variants).
"""

# %%
import numpy as np

from atomfuse import LabelMatrix, ScoreMatrix, average_precision, evaluate, load_taxonomy
from atomfuse.taxonomy import default_taxonomy_path

# Positives land at ranks 1 and 3: precisions 1/1 and 2/3.
print("AP =", average_precision([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]), "(5/6 =", 5 / 6, ")")

# %%
# Ties are broken by clip order, so an all-equal score vector ranks clips
# as listed.

print("tied AP =", average_precision([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]))

# %%
# The bundled taxonomy has 64 classes in the six agent groups. We score a
# random label matrix with a noisy model.

tax = load_taxonomy(default_taxonomy_path())
rng = np.random.default_rng(0)
n_clips = 300
ids = [f"clip{i:04d}" for i in range(n_clips)]
y = (rng.random((n_clips, tax.num_classes)) < 0.08).astype(int)
y[:, -1] = 0  # one class never occurs
scores = ScoreMatrix("noisy", ids, y * 0.6 + rng.random(y.shape))
report = evaluate(scores, LabelMatrix(ids, y), tax)

print(f"mAP {report.map:.4f}")
for gid, value in report.map_per_group.items():
    print(f"  mAP@{gid:<3} {value:.4f}")
print("excluded (no positives):", report.excluded_classes)
