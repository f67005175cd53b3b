"""
Online training and its cost
============================

Retraining from scratch after every batch repeats work on labels the
model has already seen. The online mode keeps the weights and trains on
the new batch plus a random replay fraction ``p`` of older labels. Here we
compare accuracy and the number of examples backpropagated.
"""

from omedal import DatasetPool, LearnerConfig, LoopConfig, SamplerConfig, make_blobs, run_experiment
from omedal.alloop import predicted_examples_processed

X, y = make_blobs(1000, dim=20, n_classes=4, separation=3.0, clusters_per_class=3, seed=1)
pool = DatasetPool.from_split(X, y, test_fraction=0.2, seed=1)
learner_cfg = LearnerConfig(input_dim=20, n_classes=4)
sampler_cfg = SamplerConfig(M=50, ell=20)

runs = {
    "retrain": LoopConfig(mode="medal", patience=20, seed=1),
    "online p=0.875": LoopConfig(mode="omedal", p=0.875, epochs_per_iter=10, patience=None, seed=1),
    "online p=0.125": LoopConfig(mode="omedal", p=0.125, epochs_per_iter=10, patience=None, seed=1),
}
for name, cfg in runs.items():
    led = run_experiment(cfg, sampler_cfg, learner_cfg, pool)
    print(f"{name:>15}: max accuracy {led.max_test_acc:.3f}, examples processed {led.examples_processed:>9,d}")

# With a fixed epoch count the online cost is known before running:
# each iteration trains E * (ell + floor(p * labeled_so_far)) examples.
cfg = runs["online p=0.875"]
print([predicted_examples_processed(cfg, sampler_cfg, t) for t in range(1, 6)])
