"""
Training the fuzzy classifier
=============================

A four-input, two-membership-function Sugeno network is fitted with hybrid
learning: least squares for the linear rule outputs, gradient descent for
the sigmoid membership functions.
"""

import numpy as np

from anfis_auth.anfis import dumps_model, init_model, predict, train_hybrid

rng = np.random.default_rng(1)

# three clouds standing in for owner (+1), suspicious (0) and attacker (-1) windows
centers = {1: [0.5, -0.5, 0.3, -0.3], 0: [3.0, 1.5, 1.5, 0.8], -1: [6.0, 4.0, 3.0, 2.0]}
X = np.vstack([rng.normal(c, 0.5, size=(120, 4)) for c in centers.values()])
y = np.repeat(list(centers), 120).astype(float)
order = rng.permutation(len(y))
X, y = X[order], y[order]
train, test = slice(0, 250), slice(250, None)

model, report = train_hybrid(init_model(X[train]), X[train], y[train], epochs=200)
print(f"{report.epochs_run} epochs, training RMSE {report.final_rmse:.4f}, converged={report.converged}")

pred = np.clip(np.round(predict(model, X[test])), -1, 1)
print(f"held-out nearest-target accuracy: {np.mean(pred == y[test]):.3f}")

# the model is plain text and round-trips exactly
print(dumps_model(model).splitlines()[:4])
