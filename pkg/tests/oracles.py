"""Independent oracles for the test suite.

These deliberately avoid the library's own code paths: matmul is a naive
triple loop, eigenvalues come from numpy's dense eigensolver (which the
shipped library never uses), and the finite-difference harness is written
from scratch rather than imported from the package.
"""

import numpy as np


def naive_matmul(a, b):
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            out[i, j] = s
    return out


def dense_max_eig(a):
    return float(np.linalg.eigvalsh(a)[-1])


def central_diff_grad(f, x, h=1e-5):
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    g = np.zeros_like(flat)
    for i in range(flat.size):
        bump = np.zeros_like(flat)
        bump[i] = h
        g[i] = (f((flat + bump).reshape(x.shape)) - f((flat - bump).reshape(x.shape))) / (2 * h)
    return g.reshape(x.shape)


def max_rel_err(analytic, reference):
    scale = max(np.max(np.abs(reference)), 1e-12)
    return float(np.max(np.abs(analytic - reference)) / scale)


def random_onehot(rng, n, c):
    labels = rng.integers(0, c, size=n)
    t = np.zeros((n, c))
    t[np.arange(n), labels] = 1.0
    return t, labels
