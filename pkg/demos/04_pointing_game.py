"""
Pointing Game
=============

Weakly supervised localization check: a saliency map scores a hit when its
argmax lands inside a ground-truth box of the target class. Accuracy is
hits/(hits+misses) per class, averaged (unweighted) across classes.
"""

import numpy as np

from sess import (
    OcclusionMethod,
    SessConfig,
    aggregate_pointing,
    make_quadrant_mock,
    pointing_game,
    run_sess,
)

backend = make_quadrant_mock()
rng = np.random.default_rng(0)

results = []
for trial in range(8):
    # a bright object in a random quadrant; the box annotates it
    quadrant = int(rng.integers(0, 4))
    top = int(rng.integers(5, 50)) + (112 if quadrant >= 2 else 0)
    left = int(rng.integers(5, 50)) + (112 if quadrant % 2 else 0)
    image = np.zeros((224, 224, 3), dtype=np.float32)
    image[top : top + 50, left : left + 50] = 1.0
    box = [left, top, left + 49, top + 49]

    cfg = SessConfig(n_scales=2, prefilter_ratio=50.0, smoothing=False,
                     target_class=quadrant)
    sal = run_sess(image, backend, OcclusionMethod(), cfg)
    hit = pointing_game(sal, [box])
    results.append((quadrant, hit))
    print(f"trial {trial}: class {quadrant}, box {box} -> "
          f"{'hit' if hit else 'miss'}")

summary = aggregate_pointing(results)
for class_id, stats in summary.per_class.items():
    print(f"class {class_id}: {stats['hits']} hits, {stats['misses']} misses, "
          f"acc {stats['acc']:.2f}")
print(f"mean accuracy: {summary.mean_acc:.3f}")
