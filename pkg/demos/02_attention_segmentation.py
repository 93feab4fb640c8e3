"""From an attention profile to word segments and boundaries.

The discovery rule: per head, keep the smallest set of frames (taken in
descending weight order) holding `retain_mass` of the head's attention;
maximal runs of kept frames are the attention segments; word boundaries go
at midpoints between adjacent segments plus the outermost segment edges.
"""

import numpy as np

from attnseg import (
    SegmenterConfig,
    extract_segments,
    infer_boundaries,
    threshold_profile,
)

# a hand-made 2-head profile over 30 frames with bumps under three "words"
frames = 30
profile = np.full((2, frames), 0.002)
profile[0, 2:8] = 0.12      # word 1, head 0
profile[1, 10:17] = 0.10    # word 2, head 1
profile[0, 20:27] = 0.09    # word 3, head 0
profile /= profile.sum(axis=1, keepdims=True)

cfg = SegmenterConfig(layer=9, retain_mass=0.9, merge_mode="union")
masks = threshold_profile(profile, cfg.retain_mass)

for h in range(2):
    row = "".join("#" if m else "." for m in masks[h])
    print(f"head {h} kept: {row}")

segments = extract_segments(profile, masks, cfg)
print("\nmerged segments (frames):",
      [(s.start_frame, s.end_frame) for s in segments])

boundaries = infer_boundaries(segments, duration_s=frames * 0.02, frame_shift_ms=20.0)
print("boundaries (s):", [round(t, 3) for t in boundaries.times_s])

# lowering retain_mass keeps fewer frames -- kept sets are nested
for p in (0.5, 0.7, 0.9, 1.0):
    kept = threshold_profile(profile, p).sum()
    print(f"retain_mass={p:.1f}: {kept} of {2 * frames} head-frames kept")
