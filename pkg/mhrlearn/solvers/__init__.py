from .alternating import (
    MONOTONICITY_SLACK,
    AlternatingResult,
    FingerprintMismatchError,
    MonotonicityViolationError,
    TraceEntry,
    TraceStep,
    TrainedModel,
    alternate,
    fit_alternating,
    predict,
    regularizer_energies,
    solve_alpha,
    solve_beta,
    solve_beta_projected_gradient,
    solve_theta,
    task_targets,
    theta_objective,
    views_fingerprint,
)
from .kls import SingularSystemError, condition_estimate, fit_kls, kls_system
from .model_file import (
    ModelFileFormatError,
    ModelFileHeader,
    ModelFlags,
    TraceRecord,
    ViewRecord,
    decode_model,
    encode_model,
    load_model,
    save_model,
)
from .objective import (
    LossKind,
    ObjectiveConfig,
    data_loss,
    hinge,
    kls_objective,
    labeled_row_scales,
    margins,
    mhr_objective,
    regularization,
    smoothed_hinge,
    smoothed_hinge_u,
    smoothed_objective,
)
from .simplex import accelerated_projected_gradient, project_onto_simplex, project_simplex
from .svm import NonFiniteObjectiveError, SmoothedHingeState, fit_svm_nesterov, svm_gradient, svm_lipschitz
from .view_bank import CONCAT_VIEW_NAME, ViewBank, relative_order

__all__ = [
    "MONOTONICITY_SLACK",
    "AlternatingResult",
    "FingerprintMismatchError",
    "MonotonicityViolationError",
    "TraceEntry",
    "TraceStep",
    "TrainedModel",
    "alternate",
    "fit_alternating",
    "predict",
    "regularizer_energies",
    "solve_alpha",
    "solve_beta",
    "solve_beta_projected_gradient",
    "solve_theta",
    "task_targets",
    "theta_objective",
    "views_fingerprint",
    "SingularSystemError",
    "condition_estimate",
    "fit_kls",
    "kls_system",
    "ModelFileFormatError",
    "ModelFileHeader",
    "ModelFlags",
    "TraceRecord",
    "ViewRecord",
    "decode_model",
    "encode_model",
    "load_model",
    "save_model",
    "LossKind",
    "ObjectiveConfig",
    "data_loss",
    "hinge",
    "kls_objective",
    "labeled_row_scales",
    "margins",
    "mhr_objective",
    "regularization",
    "smoothed_hinge",
    "smoothed_hinge_u",
    "smoothed_objective",
    "accelerated_projected_gradient",
    "project_onto_simplex",
    "project_simplex",
    "NonFiniteObjectiveError",
    "SmoothedHingeState",
    "fit_svm_nesterov",
    "svm_gradient",
    "svm_lipschitz",
    "CONCAT_VIEW_NAME",
    "ViewBank",
    "relative_order",
]
