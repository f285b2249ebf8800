"""
===========================
Scoring with a slot head
===========================

The slot head keeps one slot per class. At every iteration the slots
compete for feature locations (the softmax runs across slots), then each
slot is updated from the features it claimed. A per-slot readout turns the
final slot states into class probabilities.

Weights here are random; in practice they come from an ``.atsl`` archive
exported by the training code.
"""

# %%
import tempfile
from pathlib import Path

import numpy as np

from atomfuse import load_model, save_model, slot_attention_forward
from atomfuse.slotattn import init_params

params = init_params(num_classes=4, slot_dim=16, input_dim=32, iterations=3, num_background=1, seed=0)
rng = np.random.default_rng(1)
features = rng.standard_normal((8 * 7, 32))  # 8 frames x 7 spatial cells, flattened

out = slot_attention_forward(features, params)
print("slot states", out.slot_states.shape)
for it, attn in enumerate(out.attention, 1):
    share = attn.mean(axis=1)
    print(f"iteration {it}: column sums in [{attn.sum(0).min():.6f}, {attn.sum(0).max():.6f}],",
          "mean share per slot", np.round(share, 3))
print("class probabilities", np.round(out.class_probs, 4))

# %%
# Order of locations does not matter: positional information has to be in
# the features already.

perm = rng.permutation(features.shape[0])
print("max change under permutation:",
      np.abs(slot_attention_forward(features[perm], params).class_probs - out.class_probs).max())

# %%
# Weights travel as an ATSL1 archive.

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "slot_head.atsl"
    save_model(params, path)
    again = load_model(path)
    print(path.name, f"{path.stat().st_size} bytes, same output:",
          np.array_equal(slot_attention_forward(features, again).class_probs, out.class_probs))
