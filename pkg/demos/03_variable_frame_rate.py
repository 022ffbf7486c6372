"""From synthetic clips to a variable frame-rate stream.

Static, slow-pan and fast-pan clips are labelled 30, 60 and 120 fps. A
cascade trained on part of them decides the frame rate of a spliced test
video, which is then decimated and restored by frame repetition.
"""

import numpy as np

from vfrate.cascade import train_cascade
from vfrate.features import FeatureConfig, extract_features
from vfrate.pipeline import (GopPlan, decide_sequence, decimate, duplicate_upsample, frames_dropped_report,
                             gop_skip_plan)
from vfrate.selection import ConfusionMatrix, evaluate
from vfrate.synthetic import make_corpus, pan_clip

cfg = FeatureConfig(search_range=12)
clips = make_corpus(seed=3)
X, y = [], []
for clip in clips:
    rows = [fv.values for fv in extract_features(clip.frames, cfg)][1:]
    X.extend(rows)
    y.extend([clip.label] * len(rows))
model = train_cascade(np.array(X), y, seed=3)
print(f"trained on {len(y)} chunks: " + ", ".join(f"{r} fps x{y.count(r)}" for r in (30, 60, 120)))

# splice a test video: still, then a fast pan, then a slow pan
rng = np.random.default_rng(99)
video = (pan_clip(rng, 16, 64, 64, (0, 0), 1.0) + pan_clip(rng, 16, 64, 64, (-9, 0), 1.0)
         + pan_clip(rng, 18, 64, 64, (0, 2), 1.0))
timeline = decide_sequence(video, model, cfg)
truth = [30] * 4 + [120] * 4 + [60] * 4
print("decisions:", [int(r) for r in timeline.rates], f"(+{timeline.tail_length} tail frames at 120)")
report = evaluate(ConfusionMatrix.from_predictions(truth, [int(r) for r in timeline.rates], (30, 60, 120)))
print(f"macro precision {report.precision:.2f}, recall {report.recall:.2f}")

kept, idx = decimate(video, timeline)
restored = duplicate_upsample(kept, timeline)
print(f"kept {len(kept)} of {len(video)} frames; restored {len(restored)}")
drop = frames_dropped_report(timeline)
print(drop.summary())
print("note:", drop.note)

gop = gop_skip_plan(timeline, GopPlan(16, 112))
print("skipped POCs legal under a GOP-16 hierarchy:", gop.legal)
