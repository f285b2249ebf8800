"""
=======================
Frame and resize plans
=======================

Every clip is reduced to 16 frames before it reaches a backbone. Validation
and test clips use a fixed plan so the same frames are seen on every run;
training clips can use a seeded jittered plan instead.
"""

# %%
# Fixed plans take the center frame of each of 16 equal segments.

from atomfuse import plan_fixed, plan_jitter, plan_resolution

for length in (16, 32, 10, 75):
    print(f"{length:>3} frames ->", list(plan_fixed(length, 16).indices))

# %%
# A 10-frame clip is shorter than the plan, so some frames repeat. The
# jittered plan picks one frame at random inside each segment; the same seed
# always gives the same plan.

for seed in (0, 1, 0):
    print(f"seed {seed}:", list(plan_jitter(75, 16, seed).indices))

# %%
# Resolution plans only describe the rescale. The frames are 512x1536 and
# the target here is 256x658, which does not keep the 3:1 aspect ratio, so
# both a stretch and a letterbox plan are worth looking at.

for mode in ("stretch", "letterbox"):
    plan = plan_resolution(512, 1536, 256, 658, mode)
    print(mode, "scale", tuple(round(s, 4) for s in plan.scale), "content", plan.content, "pad", plan.pad)

print("aspect-preserving 256x768:", plan_resolution(512, 1536, 256, 768, "letterbox").pad)
