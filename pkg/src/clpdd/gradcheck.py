"""Finite-difference battery for every analytic gradient in the library.

Each check draws random tiny instances, compares the analytic gradient with
central finite differences, and reports the worst relative error, measured as
the maximum absolute deviation over the largest finite-difference entry (this
keeps near-zero entries from turning difference noise into spurious failures
while still catching sign/transpose mistakes, which perturb entries at the
gradient's own scale).

Instance scales are chosen to keep softmax logits in their soft regime at the
default temperature; saturated logits make both gradients vanish and the
comparison meaningless.
"""

from dataclasses import dataclass

import numpy as np

from .distill import meta_loss_and_grad, stream_seed
from .encoder import encode, encode_vjp, make_encoder
from .objective import (
    class_anchor_grad_w,
    class_anchor_loss,
    make_outer_batch,
    mse_outer_grad_w,
    mse_outer_loss,
)
from .solver import ridge_kernel, solve_backward

DEFAULT_H = 1e-5
DEFAULT_THRESHOLD = 1e-5
DEFAULT_INSTANCES = 50

CHECK_NAMES = (
    "solver_backward",
    "class_anchor_grad",
    "mse_grad",
    "encoder_vjp_identity",
    "encoder_vjp_linear",
    "encoder_vjp_mlp1",
    "pipeline_class_anchor",
    "pipeline_mse",
)


def fd_grad(f, x: np.ndarray, h: float = DEFAULT_H) -> np.ndarray:
    """Central finite differences of a scalar function of a matrix."""
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def rel_err(analytic: np.ndarray, fd: np.ndarray) -> float:
    scale = max(np.max(np.abs(fd)), 1e-12)
    return float(np.max(np.abs(analytic - fd)) / scale)


@dataclass
class CheckResult:
    name: str
    instances: int
    max_rel_err: float
    threshold: float
    passed: bool
    worst_seed: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "max_rel_err": self.max_rel_err,
            "threshold": self.threshold,
            "passed": self.passed,
            "worst_seed": self.worst_seed,
        }


def _instance_rng(seed: int, name: str, i: int) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, f"gradcheck.{name}.{i}"))


def _onehot_rows(rng, n, c):
    t = np.zeros((n, c))
    t[np.arange(n), rng.integers(0, c, size=n)] = 1.0
    return t


def _check_solver_backward(rng):
    n = int(rng.integers(2, 7))
    d = int(rng.integers(2, 9))
    c = int(rng.integers(2, 4))
    lam = float(rng.choice([0.01, 0.1, 1.0]))
    x = 0.8 * rng.standard_normal((n, d))
    y = _onehot_rows(rng, n, c)
    g = rng.standard_normal((d, c))
    analytic = solve_backward(ridge_kernel(x, y, lam), x, g)
    fd = fd_grad(lambda xp: float(np.sum(g * ridge_kernel(xp, y, lam).w_star)), x)
    return analytic, fd


def _random_batch(rng, m, d, c, scale=0.5):
    x = scale * rng.standard_normal((m, d))
    labels = np.concatenate([np.arange(c), rng.integers(0, c, size=m - c)])
    return make_outer_batch(x, labels, c)


def _check_class_anchor(rng):
    m, d, c = int(rng.integers(4, 9)), int(rng.integers(3, 9)), int(rng.integers(2, 4))
    tau = float(rng.choice([0.07, 0.2, 1.0]))
    batch = _random_batch(rng, m, d, c)
    w = 0.3 * rng.standard_normal((d, c))
    analytic = class_anchor_grad_w(batch, w, tau)
    fd = fd_grad(lambda wp: class_anchor_loss(batch, wp, tau), w)
    return analytic, fd


def _check_mse(rng):
    m, d, c = int(rng.integers(4, 9)), int(rng.integers(3, 9)), int(rng.integers(2, 4))
    batch = _random_batch(rng, m, d, c)
    w = 0.5 * rng.standard_normal((d, c))
    analytic = mse_outer_grad_w(batch, w)
    fd = fd_grad(lambda wp: mse_outer_loss(batch, wp), w)
    return analytic, fd


def _check_encoder_vjp(kind):
    def check(rng):
        n = int(rng.integers(2, 5))
        d_in = int(rng.integers(2, 6))
        d_out = d_in if kind == "identity" else int(rng.integers(2, 7))
        enc = make_encoder(
            kind, d_in, d_out, hidden_dim=int(rng.integers(3, 7)), seed=int(rng.integers(0, 2**31))
        )
        x = rng.standard_normal((n, d_in))
        u = rng.standard_normal((n, d_out))
        analytic = encode_vjp(enc, x, u)
        fd = fd_grad(lambda xp: float(np.sum(u * encode(enc, xp))), x)
        return analytic, fd

    return check


def _check_pipeline(objective):
    def check(rng):
        c = int(rng.integers(2, 4))
        d_in = int(rng.integers(2, 5))
        kind = ("identity", "linear", "mlp1")[int(rng.integers(0, 3))]
        d_out = d_in if kind == "identity" else int(rng.integers(2, 6))
        enc = make_encoder(
            kind, d_in, d_out, hidden_dim=int(rng.integers(3, 6)), seed=int(rng.integers(0, 2**31))
        )
        inputs = 0.5 * rng.standard_normal((c, d_in))  # ipc = 1
        y = np.eye(c)
        batch = _random_batch(rng, 2 * c, d_in, c, scale=0.4)
        lam, tau = 0.1, 0.07

        def loss_fn(xp):
            return meta_loss_and_grad(xp, y, enc, batch, lam, tau, objective)[0]

        _, analytic = meta_loss_and_grad(inputs, y, enc, batch, lam, tau, objective)
        fd = fd_grad(loss_fn, inputs)
        return analytic, fd

    return check


_CHECKS = {
    "solver_backward": _check_solver_backward,
    "class_anchor_grad": _check_class_anchor,
    "mse_grad": _check_mse,
    "encoder_vjp_identity": _check_encoder_vjp("identity"),
    "encoder_vjp_linear": _check_encoder_vjp("linear"),
    "encoder_vjp_mlp1": _check_encoder_vjp("mlp1"),
    "pipeline_class_anchor": _check_pipeline("class_anchor"),
    "pipeline_mse": _check_pipeline("mse"),
}


def run_battery(
    seed: int = 0,
    instances: int = DEFAULT_INSTANCES,
    threshold: float = DEFAULT_THRESHOLD,
    corrupt: str | None = None,
) -> list[CheckResult]:
    """Run every check; `corrupt` names a check whose analytic gradient is
    deliberately perturbed (negative-control hook for tests)."""
    if corrupt is not None and corrupt not in _CHECKS:
        raise ValueError(f"unknown check {corrupt!r}; choose from {CHECK_NAMES}")
    results = []
    for name in CHECK_NAMES:
        fn = _CHECKS[name]
        worst, worst_seed = 0.0, 0
        for i in range(instances):
            rng = _instance_rng(seed, name, i)
            analytic, fd = fn(rng)
            if corrupt == name:
                analytic = analytic * 1.001 + 1e-3
            err = rel_err(analytic, fd)
            if err > worst:
                worst, worst_seed = err, stream_seed(seed, f"gradcheck.{name}.{i}")
        results.append(
            CheckResult(
                name=name,
                instances=instances,
                max_rel_err=worst,
                threshold=threshold,
                passed=worst <= threshold,
                worst_seed=worst_seed,
            )
        )
    return results


def battery_report(results: list[CheckResult]) -> dict:
    return {
        "checks": [r.to_dict() for r in results],
        "battery_size": len(results),
        "passed": all(r.passed for r in results),
    }
