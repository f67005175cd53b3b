"""
Comparing acquisition strategies
================================

Retrain-from-scratch active learning on a synthetic 4-class pool with
three ways of choosing the next batch: entropy filter plus centroid
distance, plain entropy, and uniform random.
"""

from omedal import DatasetPool, LearnerConfig, LoopConfig, SamplerConfig, make_blobs, run_experiment
from omedal.alloop import full_data_baseline

X, y = make_blobs(1000, dim=20, n_classes=4, separation=3.0, clusters_per_class=3, seed=0)
pool = DatasetPool.from_split(X, y, test_fraction=0.2, seed=0)
learner_cfg = LearnerConfig(input_dim=20, n_classes=4)
print(f"pool {pool.n_unlabeled}, test {len(pool.test)}")

# Reference point: the same network trained on every pool label.
train = pool.unlabeled
full_acc, _ = full_data_baseline(learner_cfg, X[train], y[train], X[pool.test], y[pool.test], epochs=80)
target = 0.95 * full_acc
print(f"full-data accuracy {full_acc:.3f}; target {target:.3f}")

# Short fixed schedules keep this quick; the acceptance suite uses patience.
ledgers = {}
for mode in ("medal", "uncertainty", "random"):
    cfg = LoopConfig(mode=mode, epochs_per_iter=30, patience=None)
    ledgers[mode] = run_experiment(cfg, SamplerConfig(M=50, ell=20), learner_cfg, pool)

print(f"{'labeled':>8}" + "".join(f"{m:>13}" for m in ledgers))
curves = {m: led.curve() for m, led in ledgers.items()}
for k in range(0, len(curves["medal"]), 4):
    pct = curves["medal"][k][0]
    print(f"{pct:>8.1%}" + "".join(f"{curves[m][k][1]:>13.3f}" for m in ledgers))

for mode, led in ledgers.items():
    pct = led.pct_labeled_to_reach(target)
    print(f"{mode:>12}: " + ("never reached the target" if pct is None else f"reached the target at {pct:.1%} labeled"))
