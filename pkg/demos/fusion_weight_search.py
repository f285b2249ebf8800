"""
============================
Weighted fusion of backbones
============================

Three backbones produce clip x class score matrices. Each is good on a
different subset of classes, so a weighted sum beats every single model.
Weights are searched on a validation split and then applied to a held-out
test split.
"""

# %%
import numpy as np

from atomfuse import FusionWeights, LabelMatrix, ScoreMatrix, evaluate, fuse, load_taxonomy, optimize_weights
from atomfuse.taxonomy import default_taxonomy_path

tax = load_taxonomy(default_taxonomy_path())
rng = np.random.default_rng(42)
C = tax.num_classes

# Each synthetic backbone sees a strong signal on its own third of the
# classes; they also differ in overall quality and score scale.
strength = np.full((3, C), 0.3)
for m, peak in enumerate([1.8, 1.2, 0.9]):
    strength[m, m::3] = peak
noise = [1.0, 1.0, 3.0]


def split(n, name):
    ids = [f"{name}{i:04d}" for i in range(n)]
    y = (rng.random((n, C)) < 0.1).astype(int)
    models = [
        ScoreMatrix(backbone, ids, noise[m] * (y * strength[m] + rng.standard_normal((n, C))))
        for m, backbone in enumerate(["x3d-l", "x3d-m", "slowfast"])
    ]
    return models, LabelMatrix(ids, y)


val_scores, val_labels = split(400, "val")
test_scores, test_labels = split(600, "test")

# %%
# Search the simplex: a 0.05 lattice (231 points for three models), then four
# rounds of coordinate refinement.

weights, val_map = optimize_weights(val_scores, val_labels, tax, grid_step=0.05, refine_rounds=4)
print("weights", {k: round(w, 4) for k, w in zip(weights.model_ids, weights.w)}, f"val mAP {val_map:.4f}")

# %%
# Apply to the test split, next to each single model and a plain average.

rows = {s.model_id: evaluate(s, test_labels, tax) for s in test_scores}
uniform = FusionWeights(weights.model_ids, [1 / 3] * 3)
rows["uniform"] = evaluate(fuse(test_scores, uniform), test_labels, tax)
rows["fusion"] = evaluate(fuse(test_scores, weights), test_labels, tax)

print(f"{'':10} {'mAP':>6} " + " ".join(f"{'@' + g:>6}" for g in tax.group_ids))
for name, r in rows.items():
    print(f"{name:10} {r.map:6.3f} " + " ".join(f"{r.map_per_group[g]:6.3f}" for g in tax.group_ids))
