"""A Gini random forest grown from scratch.

Two Gaussian blobs plus three noise features. The forest should separate the
blobs, credit the informative feature with most of the impurity decrease and
produce the same model whatever the number of threads.
"""

import numpy as np

from vfrate.forest import RandomForest, TrainConfig, best_split, train_forest

rng = np.random.default_rng(1)
n = 300
y = np.where(np.arange(n) % 2 == 0, "slow", "fast")
X = rng.normal(size=(n, 4))
X[:, 0] += 3.0 * (y == "fast")

split = best_split(X, (y == "fast").astype(int), range(4))
print(f"root split: feature {split.feature} < {split.threshold:.3f}, gain {split.gain:.4f}")

config = TrainConfig(n_trees=50, max_depth=5, seed=7)
forest = train_forest(X, y.tolist(), config, tie_break="fast")
acc = np.mean(np.array(forest.predict_many(X)) == y)
print(f"training accuracy {acc:.3f}")
print("feature importance:", np.round(forest.feature_importance(), 3))

label, votes = forest.predict(np.array([3.0, 0.0, 0.0, 0.0]))
print(f"x0 = 3 -> {label} {votes}")

same = train_forest(X, y.tolist(), config, tie_break="fast", n_jobs=4).dumps() == forest.dumps()
print("identical model with 4 threads:", same)
print("JSON model size:", len(forest.dumps()), "bytes")
assert RandomForest.loads(forest.dumps()).predict_many(X) == forest.predict_many(X)
