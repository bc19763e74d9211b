"""Three routes to the same linear probe.

The ridge probe on features X with one-hot targets Y can be computed three
ways: the d x d primal normal equations, the N x N sample-space kernel system,
and the steady state of plain gradient descent. This script shows all three
agree, and what happens to gradient descent past its stable step size.
"""

import numpy as np

from clpdd import (
    gd_steady_state,
    gen_blobs,
    ridge_kernel,
    ridge_primal,
    stable_step_bound,
)

rng = np.random.default_rng(0)

# a wide problem: 6 samples, 40 features -- exactly the regime where the
# kernel route replaces a 40x40 solve with a 6x6 one
x = rng.standard_normal((6, 40))
y = np.eye(3)[np.arange(6) % 3]
lam = 0.1

w_primal = ridge_primal(x, y, lam)
sol = ridge_kernel(x, y, lam)
print(f"solver route chosen by ridge_kernel: {sol.mode}")
print(
    "primal vs kernel rel difference:",
    np.linalg.norm(w_primal - sol.w_star) / np.linalg.norm(w_primal),
)

# the cached N x C matrix p solves (K + lam*I) p = Y ...
a = x @ x.T + lam * np.eye(6)
print("||(K+lam I)p - Y|| =", np.linalg.norm(a @ sol.p - y))
# ... and reconstructs the probe as X^T p
print("||W* - X^T p||     =", np.linalg.norm(sol.w_star - x.T @ sol.p))

# gradient descent on the ridge objective converges to the same probe for any
# step below 2/mu_max(H); at 1/mu_max it is safely inside the stable region
eta_max = stable_step_bound(x, lam)
print(f"\nstable step bound 2/mu_max = {eta_max:.4f}")
for steps in (10, 100, 1000, 5000):
    w_gd = gd_steady_state(x, y, lam, 0.5 * eta_max, steps)
    err = np.linalg.norm(w_gd - w_primal) / np.linalg.norm(w_primal)
    print(f"  GD at eta=bound/2, {steps:5d} steps: rel error {err:.2e}")

# past the bound the iterates blow up instead
w_div = gd_steady_state(x, y, lam, 1.25 * eta_max, 200)
print(f"  GD at eta=1.25*bound, 200 steps: ||W|| = {np.linalg.norm(w_div):.2e}")

# the same machinery runs on generated blob data: fit the probe on the full
# train split and score the eval split by argmax
train, ev = gen_blobs(5, 16, 100, center_scale=2.0, cluster_std=0.5, seed=1)
sol = ridge_kernel(train.inputs, train.onehot_labels(), lam)
preds = np.argmax(ev.inputs @ sol.w_star, axis=1)
print(f"\nblob task probe accuracy (full train set): {np.mean(preds == ev.labels):.3f}")
