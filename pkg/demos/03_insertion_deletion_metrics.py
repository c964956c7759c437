"""
Insertion/deletion evaluation
=============================

Scoring a saliency map by how quickly the class probability rises when the
most salient pixels are restored into a blurred image (insertion), and how
quickly it falls when they are removed (deletion). A good map has a high
insertion AUC and a low deletion AUC; overall = AUC(ins) - AUC(del).
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sess import (
    OcclusionMethod,
    SessConfig,
    deletion_curve,
    insertion_curve,
    make_quadrant_mock,
    overall_score,
    run_sess,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

backend = make_quadrant_mock()

image = np.full((224, 224, 3), 0.0, dtype=np.float32)
image[10:90, 15:95] = 1.0  # evidence for class 0 (top-left quadrant)

cfg = SessConfig(n_scales=2, prefilter_ratio=50.0, smoothing=False, target_class=0)
enhanced = run_sess(image, backend, OcclusionMethod(), cfg)
uniform = np.full((224, 224), 0.5, dtype=np.float32)

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for name, sal, color in [("enhanced", enhanced, "tab:blue"),
                          ("uniform", uniform, "tab:gray")]:
    ins = insertion_curve(image, sal, backend, 0)
    dele = deletion_curve(image, sal, backend, 0)
    print(f"{name:9s} insertion {ins.auc:.4f}  deletion {dele.auc:.4f}  "
          f"overall {overall_score(ins, dele):+.4f}")
    axes[0].plot(ins.fractions, ins.scores, color=color, label=name)
    axes[1].plot(dele.fractions, dele.scores, color=color, label=name)

axes[0].set_title("Insertion")
axes[1].set_title("Deletion")
for ax in axes:
    ax.set_xlabel("pixel fraction")
    ax.set_ylabel("class probability")
    ax.legend()
    ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(out_dir / "insertion_deletion.png", dpi=110)
print(f"curves written to {out_dir}/insertion_deletion.png")
