"""Dataset distillation through a closed-form linear probe.

A small synthetic set is optimized so that the ridge-regression probe it
induces (solved in sample-space kernel form and differentiated analytically)
classifies real data well under a temperature-scaled class-anchor
cross-entropy. Ships with selection baselines, a trained-probe evaluator,
gradient-check tooling, and a CLI.
"""

from .data import (
    BadMagicError,
    Dataset,
    FeatureFileError,
    LabelRangeError,
    TruncatedFileError,
    VersionError,
    gen_blobs,
    load_features,
    save_features,
)
from .distill import (
    AdamState,
    DistillConfig,
    DistillDivergenceError,
    SyntheticSet,
    augment,
    distill_step,
    init_synthetic,
    meta_loss_and_grad,
    run_distill,
    sample_balanced_batch,
)
from .encoder import Encoder, encode, encode_vjp, make_encoder
from .evaluation import (
    ProbeResult,
    closed_form_probe,
    pca_project_2d,
    select_centroid,
    select_neighbor,
    select_random,
    train_linear_probe,
)
from .gradcheck import battery_report, run_battery
from .objective import (
    OuterBatch,
    class_anchor_grad_w,
    class_anchor_loss,
    make_outer_batch,
    mse_outer_grad_w,
    mse_outer_loss,
)
from .report import MethodAccuracy, RunReport, StepMetrics
from .solver import (
    ProbeSolution,
    gd_steady_state,
    ridge_kernel,
    ridge_primal,
    solve_backward,
    stable_step_bound,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BadMagicError",
    "Dataset",
    "DistillConfig",
    "DistillDivergenceError",
    "Encoder",
    "FeatureFileError",
    "LabelRangeError",
    "TruncatedFileError",
    "VersionError",
    "MethodAccuracy",
    "OuterBatch",
    "ProbeResult",
    "ProbeSolution",
    "RunReport",
    "StepMetrics",
    "SyntheticSet",
    "augment",
    "battery_report",
    "class_anchor_grad_w",
    "class_anchor_loss",
    "closed_form_probe",
    "distill_step",
    "encode",
    "encode_vjp",
    "gd_steady_state",
    "gen_blobs",
    "init_synthetic",
    "load_features",
    "make_encoder",
    "make_outer_batch",
    "meta_loss_and_grad",
    "mse_outer_grad_w",
    "mse_outer_loss",
    "pca_project_2d",
    "ridge_kernel",
    "ridge_primal",
    "run_battery",
    "run_distill",
    "sample_balanced_batch",
    "save_features",
    "select_centroid",
    "select_neighbor",
    "select_random",
    "solve_backward",
    "stable_step_bound",
    "train_linear_probe",
]
