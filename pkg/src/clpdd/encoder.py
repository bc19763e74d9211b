"""Frozen differentiable feature extractors.

Stand-ins for pre-trained backbones at desk scale: an identity map, a fixed
random linear map, and a fixed one-hidden-layer tanh network. Each supports
the exact vector-Jacobian product needed to chain outer-loss gradients from
feature space back to the learnable inputs.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError

ENCODER_KINDS = ("identity", "linear", "mlp1")


@dataclass(frozen=True)
class Encoder:
    """Immutable feature map; weights are fixed for its whole lifetime."""

    kind: str
    input_dim: int
    feature_dim: int
    weights: tuple = ()
    seed: int = 0
    normalize: bool = False  # optional per-row L2 normalization, off by default

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "identity" and self.input_dim != self.feature_dim:
            raise DimensionError(
                f"identity encoder needs input_dim == feature_dim, "
                f"got {self.input_dim} vs {self.feature_dim}"
            )


def make_encoder(
    kind: str,
    input_dim: int,
    feature_dim: int | None = None,
    hidden_dim: int | None = None,
    seed: int = 0,
    normalize: bool = False,
) -> Encoder:
    """Build an encoder with frozen weights drawn from N(0, 1/fan_in).

    The 1/sqrt(fan_in) scale keeps feature magnitudes O(1) so the default
    ridge coefficient stays meaningful at toy scale. The same seed always
    yields bit-identical weights.
    """
    if feature_dim is None:
        feature_dim = input_dim
    rng = np.random.default_rng(seed)
    if kind == "identity":
        weights = ()
    elif kind == "linear":
        w = rng.standard_normal((input_dim, feature_dim)) / np.sqrt(input_dim)
        b = rng.standard_normal(feature_dim) / np.sqrt(input_dim)
        weights = (w, b)
    elif kind == "mlp1":
        if hidden_dim is None:
            hidden_dim = max(input_dim, feature_dim)
        w1 = rng.standard_normal((input_dim, hidden_dim)) / np.sqrt(input_dim)
        b1 = rng.standard_normal(hidden_dim) / np.sqrt(input_dim)
        w2 = rng.standard_normal((hidden_dim, feature_dim)) / np.sqrt(hidden_dim)
        b2 = rng.standard_normal(feature_dim) / np.sqrt(hidden_dim)
        weights = (w1, b1, w2, b2)
    else:
        raise ValueError(f"unknown encoder kind {kind!r}")
    return Encoder(kind, input_dim, feature_dim, weights, seed, normalize)


def _check_inputs(enc: Encoder, inputs: np.ndarray):
    if inputs.ndim != 2 or inputs.shape[1] != enc.input_dim:
        raise DimensionError(
            f"encoder expects n x {enc.input_dim} inputs, got {inputs.shape}"
        )


def encode(enc: Encoder, inputs: np.ndarray) -> np.ndarray:
    """Map inputs (n x input_dim) to features (n x feature_dim)."""
    _check_inputs(enc, inputs)
    if enc.kind == "identity":
        out = inputs
    elif enc.kind == "linear":
        w, b = enc.weights
        out = inputs @ w + b
    else:  # mlp1
        w1, b1, w2, b2 = enc.weights
        out = np.tanh(inputs @ w1 + b1) @ w2 + b2
    if enc.normalize:
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        out = out / np.where(norms == 0.0, 1.0, norms)
    return out


def encode_vjp(enc: Encoder, inputs: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Apply the transposed encoder Jacobian at `inputs` to `upstream` rows.

    Returns d<upstream, encode(inputs)>/d inputs, shape n x input_dim.
    """
    _check_inputs(enc, inputs)
    if upstream.shape != (inputs.shape[0], enc.feature_dim):
        raise DimensionError(
            f"upstream must be {inputs.shape[0]} x {enc.feature_dim}, got {upstream.shape}"
        )
    if enc.normalize:
        raise NotImplementedError(
            "encode_vjp does not differentiate through per-row normalization; "
            "build the encoder with normalize=False for distillation"
        )
    if enc.kind == "identity":
        return upstream
    if enc.kind == "linear":
        w, _ = enc.weights
        return upstream @ w.T
    w1, b1, w2, _ = enc.weights
    h = np.tanh(inputs @ w1 + b1)
    dh = (upstream @ w2.T) * (1.0 - h * h)
    return dh @ w1.T
